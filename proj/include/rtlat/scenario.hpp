#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rtlat/media_source.hpp"
#include "rtlat/netsim.hpp"
#include "rtlat/rate_control.hpp"
#include "rtlat/session.hpp"

namespace rtlat {

enum class RunMode { Static, Adaptive };
enum class ScheduleKind { None, BandwidthMbps, AttenuationDb };

/// One runnable configuration: mode, streams, profiles, thresholds, link,
/// schedule and measurement knobs. Everything has a default; scenario files
/// override selectively.
struct Scenario {
    RunMode mode = RunMode::Adaptive;
    int streams = 2;
    double duration_per_step_s = 20.0;
    double warmup_s = 2.0; // excluded from each step's measurement window
    uint64_t seed = 1;
    int64_t rtcp_interval_ms = 1000;
    int64_t rtcp_clock_hz = 90'000;
    size_t mtu = 1424; // wire bytes per RTP packet, header + extension included
    uint8_t ext_element_id = 1;

    ProfileSet profiles;
    Thresholds thresholds;
    LinkConfig link; // bandwidth_bps applies when the schedule kind is None
    // The feedback path mirrors the forward link unless overridden; an
    // explicit reverse link keeps its own fixed bandwidth (the schedule
    // drives the forward direction only).
    bool reverse_link_set = false;
    LinkConfig reverse_link;
    ScheduleKind schedule_kind = ScheduleKind::None;
    std::vector<double> schedule_steps; // Mbps or dB, one entry per step
    std::vector<AttenuationPoint> attenuation_table = default_attenuation_table();

    double sender_offset_ms = 0.0;
    double receiver_offset_ms = 0.0;

    GlassModel glass;
    RenderPolicy render;

    QualityLevel start_level = QualityLevel::High;
    double keyframe_factor = 1.0;
    int gop_length = 30;
    LevelSwitchPolicy switch_policy = LevelSwitchPolicy::NextFrame;
    double min_dwell_ms = 0.0;

    std::string out_dir;
};

struct StepSpec {
    int index = 0;
    double value = 0.0; // Mbps or dB as configured; bandwidth in Mbps when None
    int64_t bandwidth_bps = 0;
    SimTime begin = 0;
    SimTime end = 0;
};

std::vector<StepSpec> build_schedule(const Scenario& sc);

struct FrameRow {
    SimTime display_time = 0;
    int stream_id = 0;
    uint64_t frame_id = 0; // sender-side frame index
    int64_t e2e_ns = 0;
    int64_t s2s_ns = 0;
    QualityLevel level = QualityLevel::High;
    DisplayFlag flag = DisplayFlag::Ok;
    int64_t link_bw_bps = 0;
    int64_t queue_bytes = 0;
};

struct DecisionRow {
    SimTime time = 0;
    int stream_id = 0;
    double fpl_pct = 0.0;
    uint32_t jitter_ticks = 0;
    QualityLevel from = QualityLevel::High;
    QualityLevel to = QualityLevel::High;
};

struct StepSummary {
    int step_index = 0;
    double step_value = 0.0;
    int64_t bandwidth_bps = 0;
    int stream_id = 0;
    std::string label; // "ok", "pixelation" or "freezing"
    bool has_means = false;
    double mean_e2e_ms = 0.0;
    double mean_s2s_ms = 0.0;
    uint64_t displayed = 0;
    uint64_t pixelated = 0;
    double frozen_fraction = 0.0;
    double queue_busy_fraction = 0.0;
    uint64_t packets_received = 0;
    double occ_high = 0.0, occ_medium = 0.0, occ_low = 0.0;
};

struct StreamCounters {
    uint64_t frames_sent = 0;
    uint64_t packets_sent = 0;
    uint64_t packets_received = 0;
    uint64_t frames_displayed = 0;
    uint64_t frames_discarded = 0;
    uint64_t frames_pixelated = 0;
    QualityLevel final_level = QualityLevel::High;
};

struct RunResult {
    std::vector<StepSpec> steps;
    std::vector<FrameRow> frames;
    std::vector<DecisionRow> decisions;
    std::vector<StepSummary> summary;
    std::vector<StreamCounters> streams;
    LinkCounters forward_link;
    LinkCounters reverse_link;
};

/// Deterministic in-process run: same scenario and seed give byte-identical
/// outputs. Throws Error(ConfigError) on an invalid scenario.
RunResult run_scenario(const Scenario& sc);

/// Integration mode over real UDP loopback sockets: wall-clock pacing, no
/// link shaping, no schedule. Numbers are OS-dependent; use the simulated
/// mode for anything that must reproduce.
RunResult run_scenario_udp(const Scenario& sc, double duration_s);

// ---- scenario file I/O ----

// Parses and validates; returns every diagnostic found (empty means valid).
std::vector<std::string> load_scenario_file(const std::string& path, Scenario& out);

// Invariant checks on an in-memory scenario.
std::vector<std::string> validate(const Scenario& sc);

// Convenience: load + validate, throwing ConfigError listing all problems.
Scenario load_scenario_or_throw(const std::string& path);

// ---- output files ----

// Exact decimal rendering of integer nanoseconds as milliseconds (6 fraction
// digits) and seconds (9 fraction digits); no floating point involved.
std::string format_ms(int64_t ns);
std::string format_time_s(SimTime ns);

void write_frames_csv(std::ostream& os, const RunResult& r);
void write_summary_csv(std::ostream& os, const RunResult& r);
void write_decisions_csv(std::ostream& os, const RunResult& r);

// Writes frames.csv, summary.csv and decisions.csv under out_dir.
void write_outputs(const RunResult& r, const std::string& out_dir);

std::string summary_table(const RunResult& r); // human-readable step table

} // namespace rtlat
