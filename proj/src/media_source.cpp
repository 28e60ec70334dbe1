#include "rtlat/media_source.hpp"

#include <cmath>

namespace rtlat {

MediaSource::MediaSource(SourceConfig cfg, SimTime start_time)
    : cfg_(std::move(cfg)), start_time_(start_time), level_(cfg_.start_level),
      pending_level_(cfg_.start_level) {}

int64_t MediaSource::frame_interval_ns() const {
    return static_cast<int64_t>(std::llround(1e9 / framerate()));
}

SimTime MediaSource::next_capture_time() const {
    const double fps = framerate();
    return start_time_ +
           static_cast<SimTime>(std::llround(static_cast<double>(next_index_) * 1e9 / fps));
}

int64_t MediaSource::frame_size(QualityLevel level, uint64_t index) const {
    const auto& profile = cfg_.profiles.at(level);
    const int64_t base = std::llround(static_cast<double>(profile.bitrate_bps) /
                                      (8.0 * profile.framerate_fps));
    if (cfg_.keyframe_factor == 1.0)
        return base;

    const int64_t gop = cfg_.gop_length;
    const auto pos = static_cast<int64_t>(index % static_cast<uint64_t>(gop));
    const int64_t key = std::llround(static_cast<double>(base) * cfg_.keyframe_factor);
    if (pos == 0)
        return key;
    // Spread the remaining GOP budget over the non-key frames with
    // cumulative rounding, so the GOP total matches the uniform total.
    const int64_t rest = base * gop - key;
    const int64_t n = gop - 1;
    const int64_t cum_here = rest * pos / n;
    const int64_t cum_prev = rest * (pos - 1) / n;
    const int64_t size = cum_here - cum_prev;
    return size < 1 ? 1 : size;
}

Frame MediaSource::next_frame(Timestamp64 capture_ts) {
    const uint64_t index = next_index_++;
    const uint64_t pos = index % static_cast<uint64_t>(cfg_.gop_length);

    if (pending_level_ != level_) {
        if (cfg_.switch_policy == LevelSwitchPolicy::NextFrame || pos == 0)
            level_ = pending_level_;
    }

    Frame f;
    f.frame_id = index;
    f.capture_ts = capture_ts;
    f.keyframe = pos == 0;
    f.level_at_encode = level_;
    f.size_bytes = frame_size(level_, index);
    return f;
}

void MediaSource::set_level(QualityLevel level) {
    pending_level_ = level;
}

} // namespace rtlat
