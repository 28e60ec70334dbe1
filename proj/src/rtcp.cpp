#include "rtlat/rtcp.hpp"

#include <algorithm>
#include <cstdlib>

#include "rtlat/errors.hpp"

namespace rtlat {

void ReceptionStats::on_packet(uint16_t seq) {
    if (!have_any_) {
        have_any_ = true;
        max_seq_ = seq;
        base_ext_ = seq;
        received_total_ = 1;
        return;
    }
    ++received_total_;
    const auto delta = static_cast<int16_t>(static_cast<uint16_t>(seq - max_seq_));
    if (delta > 0) {
        if (seq < max_seq_)
            cycles_ += 1u << 16;
        max_seq_ = seq;
    }
    // delta <= 0: reordered or duplicate, highest unchanged
}

void ReceptionStats::update_jitter(int64_t send_ticks, int64_t arrival_ticks) {
    const int64_t transit = arrival_ticks - send_ticks;
    if (!have_transit_) {
        have_transit_ = true;
        last_transit_ = transit;
        return;
    }
    const int64_t d = std::llabs(transit - last_transit_);
    last_transit_ = transit;
    jitter_fp_ += ((d << 4) - jitter_fp_) / 16;
}

uint64_t ReceptionStats::expected_total() const {
    if (!have_any_)
        return 0;
    return extended_highest_seq() - base_ext_ + 1;
}

uint8_t fraction_lost(uint64_t expected_interval, int64_t lost_interval) {
    if (expected_interval == 0 || lost_interval <= 0)
        return 0;
    const uint64_t scaled = static_cast<uint64_t>(lost_interval) * 256 / expected_interval;
    return static_cast<uint8_t>(std::min<uint64_t>(scaled, 255));
}

RtcpReceiverReport make_report(ReceptionStats& stats, uint32_t ssrc, Timestamp64 report_time) {
    const uint64_t expected = stats.expected_total();
    const uint64_t received = stats.received_total();
    const auto expected_interval = expected - stats.expected_prior;
    const auto lost_interval = static_cast<int64_t>(expected_interval) -
                               static_cast<int64_t>(received - stats.received_prior);
    stats.expected_prior = expected;
    stats.received_prior = received;

    RtcpReceiverReport rr;
    rr.ssrc = ssrc;
    rr.fraction_lost = fraction_lost(expected_interval, lost_interval);
    const int64_t cum = static_cast<int64_t>(expected) - static_cast<int64_t>(received);
    rr.cumulative_lost = static_cast<int32_t>(std::clamp<int64_t>(cum, -(1 << 23), (1 << 23) - 1));
    rr.highest_seq = static_cast<uint32_t>(stats.extended_highest_seq());
    rr.jitter = stats.jitter_ticks();
    rr.report_time = report_time;
    return rr;
}

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t pos) {
    return static_cast<uint32_t>(b[pos]) << 24 | static_cast<uint32_t>(b[pos + 1]) << 16 |
           static_cast<uint32_t>(b[pos + 2]) << 8 | static_cast<uint32_t>(b[pos + 3]);
}

} // namespace

std::vector<uint8_t> encode_rr(const RtcpReceiverReport& rr) {
    std::vector<uint8_t> out;
    out.reserve(kReceiverReportSize);
    out.push_back(0x81); // V=2, P=0, RC=1
    out.push_back(201);  // PT=RR
    out.push_back(0);
    out.push_back(7); // length in 32-bit words minus one
    put_u32(out, rr.ssrc); // reporter
    put_u32(out, rr.ssrc); // reported-on stream
    const auto cum = static_cast<uint32_t>(rr.cumulative_lost) & 0x00FFFFFF;
    put_u32(out, static_cast<uint32_t>(rr.fraction_lost) << 24 | cum);
    put_u32(out, rr.highest_seq);
    put_u32(out, rr.jitter);
    put_u32(out, rr.report_time.seconds);
    put_u32(out, rr.report_time.fraction);
    return out;
}

RtcpReceiverReport decode_rr(std::span<const uint8_t> bytes) {
    if (bytes.size() < kReceiverReportSize)
        throw Error(Errc::TruncatedPacket,
                    std::to_string(bytes.size()) + " bytes, receiver report needs " +
                        std::to_string(kReceiverReportSize));
    if ((bytes[0] >> 6) != 2 || bytes[1] != 201)
        throw Error(Errc::BadPacketType, "not a version-2 receiver report");

    RtcpReceiverReport rr;
    rr.ssrc = get_u32(bytes, 8);
    const uint32_t loss_word = get_u32(bytes, 12);
    rr.fraction_lost = static_cast<uint8_t>(loss_word >> 24);
    uint32_t cum = loss_word & 0x00FFFFFF;
    if (cum & 0x00800000)
        cum |= 0xFF000000; // sign-extend 24-bit
    rr.cumulative_lost = static_cast<int32_t>(cum);
    rr.highest_seq = get_u32(bytes, 16);
    rr.jitter = get_u32(bytes, 20);
    rr.report_time = Timestamp64{get_u32(bytes, 24), get_u32(bytes, 28)};
    return rr;
}

} // namespace rtlat
