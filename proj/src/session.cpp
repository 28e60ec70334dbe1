#include "rtlat/session.hpp"

#include <algorithm>

#include "rtlat/errors.hpp"

namespace rtlat {

const char* to_string(DisplayFlag f) {
    switch (f) {
    case DisplayFlag::Ok: return "ok";
    case DisplayFlag::Pixelated: return "pixelated";
    case DisplayFlag::FrozenGapPreceding: return "frozen_gap";
    }
    return "?";
}

SenderSession::SenderSession(SenderConfig cfg, ClockPair clocks, SimTime start_time,
                             TransportEndpoint& transport)
    : cfg_(cfg), clocks_(clocks), transport_(transport), source_(cfg.source, start_time),
      controller_(cfg.source.start_level, cfg.thresholds, cfg.source.profiles.bitrates(),
                  cfg.min_dwell_ns) {}

void SenderSession::on_frame_tick(SimTime now_true) {
    const Timestamp64 capture_ts = clocks_.now(ClockId::Sender, now_true);
    const Frame frame = source_.next_frame(capture_ts);
    auto packets = packetize_frame(static_cast<size_t>(frame.size_bytes), capture_ts, cfg_.mtu,
                                   next_seq_, cfg_.ssrc, cfg_.payload_type);
    next_seq_ = static_cast<uint16_t>(next_seq_ + packets.size());
    packets_sent_ += packets.size();
    frame_log_.push_back(FrameLogEntry{frame.frame_id, capture_ts, frame.level_at_encode,
                                       frame.size_bytes, static_cast<int>(packets.size())});
    for (const auto& p : packets)
        transport_.send_datagram(encode_packet(p, cfg_.ext_element_id));
}

void SenderSession::on_datagram(const Datagram& dgram, SimTime now_true) {
    if (!cfg_.adaptive)
        return;
    RtcpReceiverReport rr;
    try {
        rr = decode_rr(dgram.bytes);
    } catch (const Error&) {
        return; // not a receiver report; ignore
    }
    if (auto change = controller_.on_report(rr, now_true)) {
        changes_.push_back(*change);
        source_.set_level(change->to);
    }
}

ReceiverSession::ReceiverSession(ReceiverConfig cfg, ClockPair clocks, TransportEndpoint& rtcp_out)
    : cfg_(cfg), clocks_(clocks), rtcp_out_(rtcp_out) {}

void ReceiverSession::on_datagram(const Datagram& dgram, SimTime now_true,
                                  std::vector<LatencySample>& out) {
    RtpPacket p;
    try {
        p = decode_packet(dgram.bytes, cfg_.ext_element_id);
    } catch (const Error&) {
        ++decode_errors_;
        return;
    }
    ++packets_received_;
    stats_.on_packet(p.seq);

    const Timestamp64 send_ts = join_timestamp(p.ts_block1, p.ext_ts_block2.value_or(0));
    const Timestamp64 arrival_ts = clocks_.now(ClockId::Receiver, now_true);
    stats_.update_jitter(to_ticks(send_ts, cfg_.rtcp_clock_hz),
                         to_ticks(arrival_ts, cfg_.rtcp_clock_hz));

    for (const auto& assembly : reassembler_.on_packet(p)) {
        if (auto sample = handle_assembly(assembly, now_true))
            out.push_back(*sample);
    }
}

std::optional<LatencySample> ReceiverSession::handle_assembly(const FrameAssembly& a,
                                                              SimTime now_true) {
    if (!a.complete) {
        const double fraction =
            a.expected_packets && *a.expected_packets > 0
                ? static_cast<double>(a.received_packets) / *a.expected_packets
                : 0.0;
        if (!a.expected_packets || fraction < cfg_.render.min_render_fraction) {
            ++frames_discarded_;
            return std::nullopt;
        }
    }

    LatencySample s;
    s.frame_id = frames_displayed_++;
    s.capture_ts = a.capture_ts;
    s.display_time = now_true;
    const SimTime display_clock_time = now_true + cfg_.glass.decode_display_ns;
    s.display_ts = clocks_.now(ClockId::Receiver, display_clock_time);
    s.e2e_ns = diff_ns(s.display_ts, s.capture_ts);
    s.s2s_ns = s.e2e_ns + cfg_.glass.glass_overhead_ns();
    s.received_packets = a.received_packets;
    s.expected_packets = a.expected_packets;

    if (!a.complete) {
        s.flag = DisplayFlag::Pixelated;
        ++frames_pixelated_;
    } else if (last_display_time_ >= 0 &&
               now_true - last_display_time_ > cfg_.render.freeze_threshold_ns) {
        s.flag = DisplayFlag::FrozenGapPreceding;
    }

    last_display_time_ = now_true;
    display_times_.push_back(now_true);
    return s;
}

void ReceiverSession::rtcp_tick(SimTime now_true) {
    const Timestamp64 report_time = clocks_.now(ClockId::Receiver, now_true);
    const RtcpReceiverReport rr = make_report(stats_, cfg_.ssrc, report_time);
    rtcp_out_.send_datagram(encode_rr(rr));
}

std::vector<FreezeInterval> classify_freezing(const std::vector<SimTime>& display_times,
                                              SimTime window_begin, SimTime window_end,
                                              SimTime threshold) {
    std::vector<FreezeInterval> out;
    auto push_gap = [&](SimTime from, SimTime to) {
        // Gap length is judged on the true pair; the emitted interval is
        // clipped to the window.
        if (to - from > threshold) {
            const SimTime b = std::max(from, window_begin);
            const SimTime e = std::min(to, window_end);
            if (e > b)
                out.push_back(FreezeInterval{b, e});
        }
    };

    // Last display at or before the window start, else the window start
    // itself acts as the leading sentinel.
    SimTime prev = window_begin;
    size_t i = 0;
    while (i < display_times.size() && display_times[i] <= window_begin)
        prev = display_times[i++];

    for (; i < display_times.size() && display_times[i] <= window_end; ++i) {
        push_gap(prev, display_times[i]);
        prev = display_times[i];
    }

    // Trailing gap: bounded by the next display beyond the window when one
    // exists, by the window end otherwise.
    push_gap(prev, i < display_times.size() ? display_times[i] : window_end);
    return out;
}

double frozen_fraction(const std::vector<FreezeInterval>& freezes, SimTime wb, SimTime we) {
    if (we <= wb)
        return 0.0;
    int64_t frozen = 0;
    for (const auto& f : freezes)
        frozen += std::max<SimTime>(0, std::min(f.end, we) - std::max(f.begin, wb));
    return static_cast<double>(frozen) / static_cast<double>(we - wb);
}

} // namespace rtlat
