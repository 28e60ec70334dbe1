#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtlat/time.hpp"

namespace rtlat {

constexpr size_t kReceiverReportSize = 32; // header + one report block

/// Receiver-side reception statistics for one RTP stream: extended highest
/// sequence number, interval loss counters and the interarrival jitter
/// estimate. Single owner; updates are sequential in arrival order.
class ReceptionStats {
public:
    // Sequence-number bookkeeping for an arrived packet.
    void on_packet(uint16_t seq);

    /// Interarrival jitter recurrence J <- J + (|D| - J)/16, kept in
    /// fixed point with 4 fractional bits and truncating division. The
    /// first packet only initializes the transit reference.
    void update_jitter(int64_t send_ticks, int64_t arrival_ticks);

    uint32_t jitter_ticks() const { return static_cast<uint32_t>(jitter_fp_ >> 4); }
    uint64_t jitter_fixed_point() const { return jitter_fp_; }

    uint64_t extended_highest_seq() const { return cycles_ + max_seq_; }
    uint64_t expected_total() const;
    uint64_t received_total() const { return received_total_; }
    bool any_received() const { return have_any_; }

    // Interval counters consumed by make_report.
    uint64_t expected_prior = 0;
    uint64_t received_prior = 0;

private:
    bool have_any_ = false;
    uint16_t max_seq_ = 0;
    uint64_t cycles_ = 0;    // accumulated wrap offset (multiples of 2^16)
    uint64_t base_ext_ = 0;  // extended seq of the first packet
    uint64_t received_total_ = 0;

    bool have_transit_ = false;
    int64_t last_transit_ = 0;
    int64_t jitter_fp_ = 0;
};

/// Loss over one reporting interval in 1/256 units:
/// floor(lost * 256 / expected), clamped to [0,255]; 0 for an empty
/// interval or when duplicates drive the loss negative.
uint8_t fraction_lost(uint64_t expected_interval, int64_t lost_interval);

struct RtcpReceiverReport {
    uint32_t ssrc = 0;
    uint8_t fraction_lost = 0;
    int32_t cumulative_lost = 0; // 24-bit signed on the wire
    uint32_t highest_seq = 0;
    uint32_t jitter = 0; // reference-clock ticks
    Timestamp64 report_time;

    bool operator==(const RtcpReceiverReport&) const = default;

    double fraction_lost_pct() const { return fraction_lost * 100.0 / 256.0; }
};

/// Builds the report for the interval since the previous call and advances
/// the interval counters.
RtcpReceiverReport make_report(ReceptionStats& stats, uint32_t ssrc, Timestamp64 report_time);

/// Standard receiver-report layout (version 2, packet type 201, one report
/// block). No sender reports flow here, so the LSR/DLSR words carry the
/// report timestamp's seconds/fraction instead; that keeps the layout
/// standard and the encode/decode pair an exact inverse.
std::vector<uint8_t> encode_rr(const RtcpReceiverReport& rr);

/// Throws TruncatedPacket or BadPacketType.
RtcpReceiverReport decode_rr(std::span<const uint8_t> bytes);

} // namespace rtlat
