#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "rtlat/time.hpp"

namespace rtlat {

constexpr size_t kRtpHeaderSize = 12;
// One-byte-format header extension carrying one 4-byte element:
// 4 bytes 0xBEDE + length, 1 byte id/len, 4 data bytes, 3 pad bytes.
constexpr size_t kRtpExtensionSize = 12;
constexpr size_t kRtpPacketOverhead = kRtpHeaderSize + kRtpExtensionSize;
constexpr size_t kMaxDatagramSize = 65507;

/// One RTP datagram. The header timestamp field carries the seconds word of
/// the 64-bit capture timestamp; the fraction word rides in a one-byte-format
/// header extension element. ext_present on the wire is implied by
/// ext_ts_block2 having a value.
struct RtpPacket {
    bool padding = false;
    bool marker = false;
    uint8_t payload_type = 96;
    uint16_t seq = 0;
    uint32_t ts_block1 = 0;
    uint32_t ssrc = 0;
    std::optional<uint32_t> ext_ts_block2;
    std::vector<uint8_t> payload;

    bool operator==(const RtpPacket&) const = default;
};

// 64-bit capture timestamp <-> the two 32-bit wire blocks.
constexpr std::pair<uint32_t, uint32_t> split_timestamp(Timestamp64 t) {
    return {t.seconds, t.fraction};
}
constexpr Timestamp64 join_timestamp(uint32_t block1, uint32_t block2) {
    return Timestamp64{block1, block2};
}

/// Serializes per RFC 3550 fixed-header layout, plus the 0xBEDE one-byte
/// extension when ext_ts_block2 is set. Byte-exact and stable across runs.
/// Throws ElementIdOutOfRange (element id not in [1,14]) or PayloadTooLarge
/// (encoded size above the UDP datagram limit).
std::vector<uint8_t> encode_packet(const RtpPacket& p, uint8_t ext_element_id = 1);

/// Exact inverse of encode_packet on valid input. Unknown extension element
/// ids are skipped; CSRC entries are skipped. Throws TruncatedPacket,
/// BadVersion or MalformedExtension.
RtpPacket decode_packet(std::span<const uint8_t> bytes, uint8_t ext_element_id = 1);

/// Splits an opaque frame of `frame_bytes` into RTP packets of at most `mtu`
/// wire bytes each (header and extension included). Every packet carries both
/// timestamp blocks; the marker is set on the last packet only; sequence
/// numbers are consecutive modulo 2^16. Throws MtuTooSmall.
std::vector<RtpPacket> packetize_frame(size_t frame_bytes,
                                       Timestamp64 capture_ts,
                                       size_t mtu,
                                       uint16_t seq_start,
                                       uint32_t ssrc,
                                       uint8_t payload_type = 96);

/// One reassembled frame. `expected_packets` comes from the marker when it
/// arrived, else from the next frame's first sequence number; it is unknown
/// only when neither bound exists (e.g. the stream just ended).
struct FrameAssembly {
    uint64_t frame_id = 0;
    Timestamp64 capture_ts;
    std::optional<int> expected_packets;
    int received_packets = 0;
    bool complete = false;
    size_t bytes = 0;
};

/// Groups arriving packets into frames by their capture timestamp. A frame
/// finalizes when its marker packet arrives or when a packet of the next
/// frame shows up, whichever happens first. Duplicates are dropped; packets
/// for an already-finalized frame are ignored. Single-owner, one instance
/// per receiving stream.
class FrameReassembler {
public:
    // Returns 0..2 finalized frames (a marker packet may close the previous
    // frame and its own in one call).
    std::vector<FrameAssembly> on_packet(const RtpPacket& p);

    // Finalizes the open frame, if any (end of run).
    std::optional<FrameAssembly> flush();

    uint64_t frames_emitted() const { return next_frame_id_; }

private:
    struct OpenFrame {
        Timestamp64 ts;
        std::set<uint16_t> seqs;
        uint16_t first_seq = 0;
        std::optional<uint16_t> marker_seq;
        size_t bytes = 0;
    };

    FrameAssembly finalize(bool marker_seen, std::optional<uint16_t> next_first_seq = {});

    std::optional<OpenFrame> open_;
    std::optional<Timestamp64> last_finalized_ts_;
    // Seq following the previous frame's marker; pins the expected first
    // packet of the next frame so head loss is detectable.
    std::optional<uint16_t> expected_first_seq_;
    uint64_t next_frame_id_ = 0;
};

} // namespace rtlat
