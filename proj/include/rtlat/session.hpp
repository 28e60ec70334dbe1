#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rtlat/media_source.hpp"
#include "rtlat/rate_control.hpp"
#include "rtlat/rtcp.hpp"
#include "rtlat/rtp.hpp"
#include "rtlat/time.hpp"
#include "rtlat/transport.hpp"

namespace rtlat {

/// Fixed camera/monitor pipeline overheads that the embedded timestamp
/// cannot see. screen-to-screen = end-to-end + capture + display delay.
struct GlassModel {
    int64_t capture_delay_ns = 45 * kNsPerMs;
    int64_t display_delay_ns = 45 * kNsPerMs;
    int64_t decode_display_ns = 0; // added to the display timestamp

    int64_t glass_overhead_ns() const { return capture_delay_ns + display_delay_ns; }
};

struct RenderPolicy {
    // Incomplete frames with at least this fraction of their packets are
    // displayed (flagged Pixelated); below it they are discarded.
    double min_render_fraction = 0.5;
    int64_t freeze_threshold_ns = 1000 * kNsPerMs;
    // A window is labeled Freezing when frozen time exceeds this share.
    double freeze_window_fraction = 0.5;
};

enum class DisplayFlag { Ok, Pixelated, FrozenGapPreceding };
const char* to_string(DisplayFlag f);

/// One displayed frame: capture stamped by the sender clock, display by the
/// receiver clock. e2e carries the clock-offset bias; s2s = e2e + glass
/// overhead, exactly, sample by sample.
struct LatencySample {
    uint64_t frame_id = 0; // receiver-side display index
    Timestamp64 capture_ts;
    Timestamp64 display_ts;
    int64_t e2e_ns = 0;
    int64_t s2s_ns = 0;
    DisplayFlag flag = DisplayFlag::Ok;
    SimTime display_time = 0; // true simulation time of the display event
    int received_packets = 0;
    std::optional<int> expected_packets;
};

struct SenderConfig {
    uint32_t ssrc = 0x1000;
    uint8_t payload_type = 96;
    uint8_t ext_element_id = 1;
    size_t mtu = 1424;
    bool adaptive = true;
    SourceConfig source;
    Thresholds thresholds;
    SimTime min_dwell_ns = 0;
};

/// Capture -> packetize -> send, plus the feedback loop: each receiver
/// report may move the encoder to a new quality level (adaptive mode only).
class SenderSession {
public:
    struct FrameLogEntry {
        uint64_t frame_id;
        Timestamp64 capture_ts;
        QualityLevel level;
        int64_t size_bytes;
        int packets;
    };

    SenderSession(SenderConfig cfg, ClockPair clocks, SimTime start_time,
                  TransportEndpoint& transport);

    SimTime next_frame_time() const { return source_.next_capture_time(); }

    // Emits one frame's packets into the transport.
    void on_frame_tick(SimTime now_true);

    // Feedback path: decodes receiver reports and applies rate control.
    void on_datagram(const Datagram& dgram, SimTime now_true);

    // The controller's current decision; the source applies it at the next
    // frame boundary per its switch policy.
    QualityLevel level() const { return controller_.level(); }
    const std::vector<FrameLogEntry>& frame_log() const { return frame_log_; }
    const std::vector<Decision>& decisions() const { return controller_.decision_log(); }
    const std::vector<BitrateChange>& changes() const { return changes_; }
    uint64_t packets_sent() const { return packets_sent_; }

private:
    SenderConfig cfg_;
    ClockPair clocks_;
    TransportEndpoint& transport_;
    MediaSource source_;
    RateController controller_;
    uint16_t next_seq_ = 0;
    uint64_t packets_sent_ = 0;
    std::vector<FrameLogEntry> frame_log_;
    std::vector<BitrateChange> changes_;
};

struct ReceiverConfig {
    uint32_t ssrc = 0x1000;
    uint8_t ext_element_id = 1;
    int64_t rtcp_interval_ns = 1000 * kNsPerMs;
    int64_t rtcp_clock_hz = 90'000;
    GlassModel glass;
    RenderPolicy render;
};

/// Receive -> reassemble -> display with latency measurement. Jitter is
/// computed from the reconstructed capture timestamp and the receiver-clock
/// arrival time, both converted to reference-clock ticks.
class ReceiverSession {
public:
    ReceiverSession(ReceiverConfig cfg, ClockPair clocks, TransportEndpoint& rtcp_out);

    // Feeds one RTP datagram; appends a sample per displayed frame.
    void on_datagram(const Datagram& dgram, SimTime now_true, std::vector<LatencySample>& out);

    // Builds and sends the periodic receiver report.
    void rtcp_tick(SimTime now_true);

    const std::vector<SimTime>& display_times() const { return display_times_; }
    uint64_t packets_received() const { return packets_received_; }
    uint64_t frames_displayed() const { return frames_displayed_; }
    uint64_t frames_discarded() const { return frames_discarded_; }
    uint64_t frames_pixelated() const { return frames_pixelated_; }
    uint64_t decode_errors() const { return decode_errors_; }
    const ReceptionStats& stats() const { return stats_; }

private:
    std::optional<LatencySample> handle_assembly(const FrameAssembly& a, SimTime now_true);

    ReceiverConfig cfg_;
    ClockPair clocks_;
    TransportEndpoint& rtcp_out_;
    FrameReassembler reassembler_;
    ReceptionStats stats_;
    uint64_t packets_received_ = 0;
    uint64_t frames_displayed_ = 0;
    uint64_t frames_discarded_ = 0;
    uint64_t frames_pixelated_ = 0;
    uint64_t decode_errors_ = 0;
    SimTime last_display_time_ = -1;
    std::vector<SimTime> display_times_;
};

struct FreezeInterval {
    SimTime begin;
    SimTime end;
};

/// Freeze intervals over [window_begin, window_end]: every gap between
/// consecutive displayed frames longer than `threshold`, with the window
/// edges acting as virtual endpoints (a stream that stops displaying is
/// frozen from its last frame to the end of the window).
std::vector<FreezeInterval> classify_freezing(const std::vector<SimTime>& display_times,
                                              SimTime window_begin, SimTime window_end,
                                              SimTime threshold);

// Fraction of [wb, we] covered by the given freeze intervals.
double frozen_fraction(const std::vector<FreezeInterval>& freezes, SimTime wb, SimTime we);

} // namespace rtlat
