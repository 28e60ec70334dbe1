#include "rtlat/rate_control.hpp"

namespace rtlat {

const char* to_string(QualityLevel l) {
    switch (l) {
    case QualityLevel::High: return "high";
    case QualityLevel::Medium: return "medium";
    case QualityLevel::Low: return "low";
    }
    return "?";
}

std::optional<QualityLevel> parse_quality_level(const std::string& s) {
    if (s == "high") return QualityLevel::High;
    if (s == "medium") return QualityLevel::Medium;
    if (s == "low") return QualityLevel::Low;
    return std::nullopt;
}

namespace {

bool below(double fpl, uint32_t jit, double fpl_th, uint32_t jit_th) {
    return fpl < fpl_th && jit < jit_th;
}

bool above(double fpl, uint32_t jit, double fpl_th, uint32_t jit_th) {
    return fpl >= fpl_th || jit >= jit_th;
}

} // namespace

QualityLevel next_level(QualityLevel current, double fpl_pct, uint32_t jitter_ticks,
                        const Thresholds& th) {
    switch (current) {
    case QualityLevel::High:
        return below(fpl_pct, jitter_ticks, th.fpl_hm_pct, th.jit_hm_ticks)
                   ? QualityLevel::High
                   : QualityLevel::Medium;
    case QualityLevel::Medium:
        if (below(fpl_pct, jitter_ticks, th.fpl_hm_pct, th.jit_hm_ticks))
            return QualityLevel::High;
        if (above(fpl_pct, jitter_ticks, th.fpl_ml_pct, th.jit_ml_ticks))
            return QualityLevel::Low;
        return QualityLevel::Medium;
    case QualityLevel::Low:
        return below(fpl_pct, jitter_ticks, th.fpl_ml_pct, th.jit_ml_ticks)
                   ? QualityLevel::Medium
                   : QualityLevel::Low;
    }
    return current;
}

std::optional<BitrateChange> RateController::on_report(const RtcpReceiverReport& rr, SimTime now) {
    const double fpl = rr.fraction_lost_pct();
    QualityLevel target = next_level(current_, fpl, rr.jitter, thresholds_);
    if (target != current_ && last_change_ >= 0 && now - last_change_ < min_dwell_ns_)
        target = current_; // still inside the dwell window

    log_.push_back(Decision{now, fpl, rr.jitter, current_, target});
    if (target == current_)
        return std::nullopt;

    const BitrateChange change{current_, target, bitrates_[rank(target)]};
    current_ = target;
    last_change_ = now;
    return change;
}

} // namespace rtlat
