#pragma once

#include <cstdint>
#include <string>

#include "rtlat/rate_control.hpp"
#include "rtlat/time.hpp"

namespace rtlat {

struct VideoProfile {
    int64_t bitrate_bps = 0;
    double framerate_fps = 30.0;
    std::string resolution_tag = "1920x1080";
};

/// The three encoder operating points. Defaults: 5 / 3.5 / 2 Mbps, all
/// 1080p at 30 fps.
struct ProfileSet {
    VideoProfile high{5'000'000, 30.0, "1920x1080"};
    VideoProfile medium{3'500'000, 30.0, "1920x1080"};
    VideoProfile low{2'000'000, 30.0, "1920x1080"};

    const VideoProfile& at(QualityLevel l) const {
        switch (l) {
        case QualityLevel::High: return high;
        case QualityLevel::Medium: return medium;
        default: return low;
        }
    }

    std::array<int64_t, 3> bitrates() const {
        return {low.bitrate_bps, medium.bitrate_bps, high.bitrate_bps};
    }
};

inline int64_t level_bitrate(QualityLevel l, const ProfileSet& profiles) {
    return profiles.at(l).bitrate_bps;
}

enum class LevelSwitchPolicy { NextFrame, NextKeyframe };

struct SourceConfig {
    ProfileSet profiles;
    QualityLevel start_level = QualityLevel::High;
    // keyframe_factor 1 = uniform frame sizes; > 1 enables GOP bursting,
    // non-key frames are shrunk so the GOP-average rate stays on target.
    double keyframe_factor = 1.0;
    int gop_length = 30;
    LevelSwitchPolicy switch_policy = LevelSwitchPolicy::NextFrame;
};

struct Frame {
    uint64_t frame_id = 0;
    Timestamp64 capture_ts;
    int64_t size_bytes = 0;
    bool keyframe = false;
    QualityLevel level_at_encode = QualityLevel::High;
};

/// Synthetic encoder: emits timestamped frames whose sizes realize the
/// active profile's bitrate at its framerate. Frame cadence is computed
/// from the frame index, so it never drifts. One source per stream.
class MediaSource {
public:
    MediaSource(SourceConfig cfg, SimTime start_time);

    // Capture time of the next frame: start + k / framerate.
    SimTime next_capture_time() const;

    // Emits the frame for the current slot; capture_ts is the sender-clock
    // reading the caller stamped for that slot.
    Frame next_frame(Timestamp64 capture_ts);

    // New bitrate takes effect at the next frame boundary or the next
    // keyframe, per the configured policy. Switching to the current level
    // is a no-op.
    void set_level(QualityLevel level);

    QualityLevel level() const { return level_; }
    double framerate() const { return cfg_.profiles.at(level_).framerate_fps; }
    int64_t frame_interval_ns() const;

private:
    int64_t frame_size(QualityLevel level, uint64_t index) const;

    SourceConfig cfg_;
    SimTime start_time_;
    uint64_t next_index_ = 0;
    QualityLevel level_;
    QualityLevel pending_level_;
};

} // namespace rtlat
