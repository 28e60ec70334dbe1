#include "rtlat/rtp.hpp"

#include <algorithm>

#include "rtlat/errors.hpp"

namespace rtlat {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint16_t get_u16(std::span<const uint8_t> b, size_t pos) {
    return static_cast<uint16_t>(b[pos] << 8 | b[pos + 1]);
}

uint32_t get_u32(std::span<const uint8_t> b, size_t pos) {
    return static_cast<uint32_t>(b[pos]) << 24 | static_cast<uint32_t>(b[pos + 1]) << 16 |
           static_cast<uint32_t>(b[pos + 2]) << 8 | static_cast<uint32_t>(b[pos + 3]);
}

// Serial comparison on 16-bit sequence numbers.
int16_t seq_delta(uint16_t a, uint16_t b) {
    return static_cast<int16_t>(static_cast<uint16_t>(a - b));
}

} // namespace

std::vector<uint8_t> encode_packet(const RtpPacket& p, uint8_t ext_element_id) {
    const bool ext = p.ext_ts_block2.has_value();
    if (ext && (ext_element_id < 1 || ext_element_id > 14))
        throw Error(Errc::ElementIdOutOfRange,
                    "extension element id " + std::to_string(ext_element_id) + " not in [1,14]");

    size_t total = kRtpHeaderSize + (ext ? kRtpExtensionSize : 0) + p.payload.size();
    if (total > kMaxDatagramSize)
        throw Error(Errc::PayloadTooLarge, std::to_string(total) + " bytes exceeds datagram limit");

    std::vector<uint8_t> out;
    out.reserve(total);
    out.push_back(static_cast<uint8_t>(0x80 | (p.padding ? 0x20 : 0) | (ext ? 0x10 : 0)));
    out.push_back(static_cast<uint8_t>((p.marker ? 0x80 : 0) | (p.payload_type & 0x7F)));
    put_u16(out, p.seq);
    put_u32(out, p.ts_block1);
    put_u32(out, p.ssrc);
    if (ext) {
        put_u16(out, 0xBEDE);
        put_u16(out, 2); // two 32-bit words of elements
        out.push_back(static_cast<uint8_t>(ext_element_id << 4 | 0x03)); // 4 data bytes
        put_u32(out, *p.ext_ts_block2);
        out.insert(out.end(), 3, 0); // pad to 32-bit boundary
    }
    out.insert(out.end(), p.payload.begin(), p.payload.end());
    return out;
}

RtpPacket decode_packet(std::span<const uint8_t> bytes, uint8_t ext_element_id) {
    if (bytes.size() < kRtpHeaderSize)
        throw Error(Errc::TruncatedPacket,
                    std::to_string(bytes.size()) + " bytes, header needs " +
                        std::to_string(kRtpHeaderSize));

    const uint8_t b0 = bytes[0];
    if ((b0 >> 6) != 2)
        throw Error(Errc::BadVersion, "version " + std::to_string(b0 >> 6));

    RtpPacket p;
    p.padding = (b0 & 0x20) != 0;
    const bool ext = (b0 & 0x10) != 0;
    const unsigned csrc_count = b0 & 0x0F;
    p.marker = (bytes[1] & 0x80) != 0;
    p.payload_type = bytes[1] & 0x7F;
    p.seq = get_u16(bytes, 2);
    p.ts_block1 = get_u32(bytes, 4);
    p.ssrc = get_u32(bytes, 8);

    size_t pos = kRtpHeaderSize + 4 * csrc_count;
    if (bytes.size() < pos)
        throw Error(Errc::TruncatedPacket, "CSRC list past end of packet");

    if (ext) {
        if (bytes.size() < pos + 4)
            throw Error(Errc::MalformedExtension, "extension header past end of packet");
        const uint16_t profile = get_u16(bytes, pos);
        const size_t ext_bytes = static_cast<size_t>(get_u16(bytes, pos + 2)) * 4;
        pos += 4;
        if (profile != 0xBEDE)
            throw Error(Errc::MalformedExtension, "unsupported extension profile");
        if (bytes.size() < pos + ext_bytes)
            throw Error(Errc::MalformedExtension, "extension data past end of packet");

        size_t i = pos;
        const size_t ext_end = pos + ext_bytes;
        while (i < ext_end) {
            const uint8_t head = bytes[i];
            if (head == 0) { // padding
                ++i;
                continue;
            }
            const uint8_t id = head >> 4;
            if (id == 15) // reserved: stop parsing
                break;
            const size_t len = (head & 0x0F) + 1u;
            ++i;
            if (i + len > ext_end)
                throw Error(Errc::MalformedExtension, "element overruns extension region");
            if (id == ext_element_id && len == 4 && !p.ext_ts_block2)
                p.ext_ts_block2 = get_u32(bytes, i);
            i += len; // unknown ids skipped
        }
        pos = ext_end;
    }

    p.payload.assign(bytes.begin() + static_cast<ptrdiff_t>(pos), bytes.end());
    return p;
}

std::vector<RtpPacket> packetize_frame(size_t frame_bytes,
                                       Timestamp64 capture_ts,
                                       size_t mtu,
                                       uint16_t seq_start,
                                       uint32_t ssrc,
                                       uint8_t payload_type) {
    if (mtu <= kRtpPacketOverhead)
        throw Error(Errc::MtuTooSmall,
                    "mtu " + std::to_string(mtu) + " <= overhead " +
                        std::to_string(kRtpPacketOverhead));

    const size_t usable = mtu - kRtpPacketOverhead;
    const size_t count = frame_bytes == 0 ? 1 : (frame_bytes + usable - 1) / usable;
    const auto [block1, block2] = split_timestamp(capture_ts);

    std::vector<RtpPacket> packets;
    packets.reserve(count);
    size_t remaining = frame_bytes;
    uint16_t seq = seq_start;
    for (size_t i = 0; i < count; ++i, ++seq) {
        RtpPacket p;
        p.marker = (i + 1 == count);
        p.payload_type = payload_type;
        p.seq = seq;
        p.ts_block1 = block1;
        p.ssrc = ssrc;
        p.ext_ts_block2 = block2;
        const size_t n = std::min(usable, remaining);
        p.payload.resize(n);
        for (size_t j = 0; j < n; ++j)
            p.payload[j] = static_cast<uint8_t>(seq + j);
        remaining -= n;
        packets.push_back(std::move(p));
    }
    return packets;
}

std::vector<FrameAssembly> FrameReassembler::on_packet(const RtpPacket& p) {
    std::vector<FrameAssembly> out;
    const Timestamp64 ts = join_timestamp(p.ts_block1, p.ext_ts_block2.value_or(0));

    // Stragglers of already-finalized frames.
    if (last_finalized_ts_ && ts <= *last_finalized_ts_ && (!open_ || ts != open_->ts))
        return out;

    if (open_ && ts != open_->ts) {
        if (ts < open_->ts)
            return out; // older than the open frame: stale
        out.push_back(finalize(false, p.seq));
    }

    if (!open_) {
        open_.emplace();
        open_->ts = ts;
        open_->first_seq = p.seq;
    }

    if (!open_->seqs.insert(p.seq).second)
        return out; // duplicate

    if (seq_delta(p.seq, open_->first_seq) < 0)
        open_->first_seq = p.seq;
    if (p.marker)
        open_->marker_seq = p.seq;
    open_->bytes += p.payload.size();

    if (open_->marker_seq)
        out.push_back(finalize(true));
    return out;
}

std::optional<FrameAssembly> FrameReassembler::flush() {
    if (!open_)
        return std::nullopt;
    return finalize(open_->marker_seq.has_value());
}

FrameAssembly FrameReassembler::finalize(bool marker_seen, std::optional<uint16_t> next_first_seq) {
    OpenFrame f = std::move(*open_);
    open_.reset();

    FrameAssembly a;
    a.frame_id = next_frame_id_++;
    a.capture_ts = f.ts;
    a.received_packets = static_cast<int>(f.seqs.size());
    a.bytes = f.bytes;

    // Head loss is detectable only when the previous frame's marker pinned
    // where this frame must start.
    uint16_t first = f.first_seq;
    if (expected_first_seq_ && seq_delta(*expected_first_seq_, first) < 0)
        first = *expected_first_seq_;

    if (marker_seen) {
        const int expected = seq_delta(*f.marker_seq, first) + 1;
        a.expected_packets = expected;
        a.complete = a.received_packets == expected;
        expected_first_seq_ = static_cast<uint16_t>(*f.marker_seq + 1);
    } else {
        // The next frame's first sequence number bounds this frame's span
        // (exact under in-order delivery, conservative otherwise).
        if (next_first_seq) {
            const int expected = seq_delta(*next_first_seq, first);
            if (expected >= a.received_packets)
                a.expected_packets = expected;
        }
        a.complete = false;
        expected_first_seq_.reset();
    }

    last_finalized_ts_ = f.ts;
    return a;
}

} // namespace rtlat
