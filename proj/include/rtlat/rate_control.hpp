#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtlat/rtcp.hpp"
#include "rtlat/time.hpp"

namespace rtlat {

enum class QualityLevel : uint8_t { Low = 0, Medium = 1, High = 2 };

constexpr int rank(QualityLevel l) { return static_cast<int>(l); }
const char* to_string(QualityLevel l);
std::optional<QualityLevel> parse_quality_level(const std::string& s);

/// Feedback thresholds. The high-medium pair is the stricter boundary:
/// fpl_hm <= fpl_ml and jit_hm <= jit_ml.
struct Thresholds {
    double fpl_hm_pct = 2.0;
    uint32_t jit_hm_ticks = 500;
    double fpl_ml_pct = 2.0;
    uint32_t jit_ml_ticks = 1000;
};

/// Three-level rate decision on one feedback sample.
///
/// Vector comparisons: (fpl, jit) < (F, J) means fpl < F and jit < J;
/// (fpl, jit) > (F, J) means fpl >= F or jit >= J. Promotion requires both
/// metrics strictly below the boundary; a metric sitting exactly on a
/// threshold counts as degraded. Never moves more than one level at a time.
QualityLevel next_level(QualityLevel current, double fpl_pct, uint32_t jitter_ticks,
                        const Thresholds& th);

struct BitrateChange {
    QualityLevel from;
    QualityLevel to;
    int64_t bitrate_bps = 0;
};

struct Decision {
    SimTime time;
    double fpl_pct;
    uint32_t jitter_ticks;
    QualityLevel from;
    QualityLevel to;
};

/// Applies next_level to each incoming receiver report and logs every
/// decision. Single-owner state machine, driven sequentially from the
/// sender's report-handling loop.
class RateController {
public:
    RateController(QualityLevel initial, Thresholds th,
                   std::array<int64_t, 3> level_bitrates_bps,
                   SimTime min_dwell_ns = 0)
        : current_(initial), thresholds_(th), bitrates_(level_bitrates_bps),
          min_dwell_ns_(min_dwell_ns) {}

    std::optional<BitrateChange> on_report(const RtcpReceiverReport& rr, SimTime now);

    QualityLevel level() const { return current_; }
    const std::vector<Decision>& decision_log() const { return log_; }

private:
    QualityLevel current_;
    Thresholds thresholds_;
    std::array<int64_t, 3> bitrates_;
    SimTime min_dwell_ns_;
    SimTime last_change_ = -1;
    std::vector<Decision> log_;
};

} // namespace rtlat
