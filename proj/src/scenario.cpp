#include "rtlat/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rtlat/errors.hpp"

namespace rtlat {

using nlohmann::json;

std::vector<StepSpec> build_schedule(const Scenario& sc) {
    const auto step_ns = sec_to_ns(sc.duration_per_step_s);
    std::vector<StepSpec> steps;
    if (sc.schedule_kind == ScheduleKind::None || sc.schedule_steps.empty()) {
        steps.push_back(StepSpec{0, static_cast<double>(sc.link.bandwidth_bps) / 1e6,
                                 sc.link.bandwidth_bps, 0, step_ns});
        return steps;
    }
    SimTime t = 0;
    for (size_t i = 0; i < sc.schedule_steps.size(); ++i, t += step_ns) {
        const double v = sc.schedule_steps[i];
        const int64_t bw = sc.schedule_kind == ScheduleKind::BandwidthMbps
                               ? static_cast<int64_t>(std::llround(v * 1e6))
                               : attenuation_to_bandwidth(v, sc.attenuation_table);
        steps.push_back(StepSpec{static_cast<int>(i), v, bw, t, t + step_ns});
    }
    return steps;
}

// ---- validation ----

std::vector<std::string> validate(const Scenario& sc) {
    std::vector<std::string> d;
    auto bad = [&](const std::string& msg) { d.push_back(msg); };

    if (sc.streams < 1 || sc.streams > 8)
        bad("streams must be in [1,8]");
    if (!(sc.duration_per_step_s > 0))
        bad("duration_per_step_s must be > 0");
    if (sc.warmup_s < 0 || sc.warmup_s >= sc.duration_per_step_s)
        bad("warmup_s must be in [0, duration_per_step_s)");
    if (sc.rtcp_interval_ms <= 0)
        bad("rtcp_interval_ms must be > 0");
    if (sc.rtcp_clock_hz <= 0)
        bad("rtcp_clock_hz must be > 0");
    if (sc.mtu <= kRtpPacketOverhead)
        bad("mtu must exceed the per-packet overhead of " + std::to_string(kRtpPacketOverhead));
    if (sc.ext_element_id < 1 || sc.ext_element_id > 14)
        bad("ext_element_id must be in [1,14]");

    const auto& p = sc.profiles;
    if (!(p.high.bitrate_bps > p.medium.bitrate_bps && p.medium.bitrate_bps > p.low.bitrate_bps))
        bad("profile bitrates must be strictly decreasing high > medium > low");
    for (auto level : {QualityLevel::High, QualityLevel::Medium, QualityLevel::Low}) {
        const auto& prof = p.at(level);
        if (!(prof.framerate_fps > 0))
            bad(std::string("profile ") + to_string(level) + ": framerate must be > 0");
        if (prof.bitrate_bps < 8)
            bad(std::string("profile ") + to_string(level) + ": bitrate too small");
    }
    if (p.high.framerate_fps != p.medium.framerate_fps ||
        p.medium.framerate_fps != p.low.framerate_fps)
        bad("profiles must share one framerate (level switches keep the frame cadence)");

    if (sc.thresholds.fpl_hm_pct < 0 || sc.thresholds.fpl_ml_pct < 0)
        bad("loss thresholds must be >= 0");
    if (sc.thresholds.fpl_hm_pct > sc.thresholds.fpl_ml_pct)
        bad("fpl_hm_pct must be <= fpl_ml_pct");
    if (sc.thresholds.jit_hm_ticks > sc.thresholds.jit_ml_ticks)
        bad("jit_hm_ticks must be <= jit_ml_ticks");

    const auto check_link = [&](const LinkConfig& link, const std::string& name) {
        if (link.bandwidth_bps < 0)
            bad(name + ".bandwidth_bps must be >= 0");
        if (link.queue_capacity_bytes <= 0)
            bad(name + ".queue_capacity_bytes must be > 0");
        if (link.loss_prob < 0 || link.loss_prob > 1)
            bad(name + ".loss_prob must be in [0,1]");
        if (link.propagation_delay_ns < 0 || link.delay_jitter_max_ns < 0)
            bad(name + " delays must be >= 0");
    };
    check_link(sc.link, "link");
    if (sc.reverse_link_set)
        check_link(sc.reverse_link, "reverse_link");

    if (sc.schedule_kind != ScheduleKind::None && sc.schedule_steps.empty())
        bad("schedule.steps must be non-empty");
    for (double v : sc.schedule_steps)
        if (v < 0)
            bad("schedule steps must be >= 0");

    if (sc.attenuation_table.empty()) {
        bad("attenuation_table must be non-empty");
    } else {
        for (size_t i = 1; i < sc.attenuation_table.size(); ++i)
            if (!(sc.attenuation_table[i].db > sc.attenuation_table[i - 1].db))
                bad("attenuation_table must be strictly increasing in dB");
        for (const auto& pt : sc.attenuation_table)
            if (pt.bandwidth_bps < 0)
                bad("attenuation_table bandwidths must be >= 0");
    }

    if (sc.glass.capture_delay_ns < 0 || sc.glass.display_delay_ns < 0 ||
        sc.glass.decode_display_ns < 0)
        bad("glass delays must be >= 0");

    if (sc.render.min_render_fraction < 0 || sc.render.min_render_fraction > 1)
        bad("render.min_render_fraction must be in [0,1]");
    if (sc.render.freeze_threshold_ns <= 0)
        bad("render.freeze_threshold_ms must be > 0");
    if (!(sc.render.freeze_window_fraction > 0 && sc.render.freeze_window_fraction <= 1))
        bad("render.freeze_window_fraction must be in (0,1]");

    if (sc.gop_length < 1)
        bad("source.gop_length must be >= 1");
    if (sc.keyframe_factor < 1)
        bad("source.keyframe_factor must be >= 1");
    if (sc.keyframe_factor > 1 && sc.gop_length > 1) {
        for (auto level : {QualityLevel::High, QualityLevel::Medium, QualityLevel::Low}) {
            const auto& prof = p.at(level);
            const auto base = static_cast<int64_t>(
                std::llround(static_cast<double>(prof.bitrate_bps) / (8.0 * prof.framerate_fps)));
            const auto key = static_cast<int64_t>(
                std::llround(static_cast<double>(base) * sc.keyframe_factor));
            if (base * sc.gop_length - key < sc.gop_length - 1)
                bad(std::string("profile ") + to_string(level) +
                    ": keyframe_factor leaves no budget for non-key frames");
        }
    }
    if (sc.min_dwell_ms < 0)
        bad("control.min_dwell_ms must be >= 0");
    return d;
}

// ---- JSON loading ----

namespace {

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed, std::vector<std::string>& d) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            d.push_back(path + ": unknown key \"" + key + "\"");
    }
}

bool want_number(const json& j, const std::string& path, std::vector<std::string>& d) {
    if (j.is_number())
        return true;
    d.push_back(path + ": expected a number");
    return false;
}

void get_num(const json& j, const std::string& path, const char* key, double& out,
             std::vector<std::string>& d) {
    if (!j.contains(key))
        return;
    if (want_number(j[key], path + "." + key, d))
        out = j[key].get<double>();
}

template <typename Int>
void get_int(const json& j, const std::string& path, const char* key, Int& out,
             std::vector<std::string>& d) {
    if (!j.contains(key))
        return;
    const auto& v = j[key];
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        d.push_back(path + "." + key + ": expected an integer");
        return;
    }
    out = v.get<Int>();
}

void get_ms_as_ns(const json& j, const std::string& path, const char* key, int64_t& out_ns,
                  std::vector<std::string>& d) {
    if (!j.contains(key))
        return;
    if (want_number(j[key], path + "." + key, d))
        out_ns = ms_to_ns(j[key].get<double>());
}

void load_profile(const json& j, const std::string& path, VideoProfile& p,
                  std::vector<std::string>& d) {
    check_keys(j, path, {"bitrate_bps", "framerate_fps", "resolution"}, d);
    get_int(j, path, "bitrate_bps", p.bitrate_bps, d);
    get_num(j, path, "framerate_fps", p.framerate_fps, d);
    if (j.contains("resolution")) {
        if (j["resolution"].is_string())
            p.resolution_tag = j["resolution"].get<std::string>();
        else
            d.push_back(path + ".resolution: expected a string");
    }
}

} // namespace

std::vector<std::string> load_scenario_file(const std::string& path, Scenario& out) {
    std::vector<std::string> d;
    std::ifstream in(path);
    if (!in) {
        d.push_back("cannot open " + path);
        return d;
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        d.push_back(std::string("parse error: ") + e.what());
        return d;
    }
    if (!j.is_object()) {
        d.push_back("top level must be an object");
        return d;
    }

    Scenario sc;
    check_keys(j, "$",
               {"mode", "streams", "duration_per_step_s", "warmup_s", "seed", "rtcp_interval_ms",
                "rtcp_clock_hz", "mtu", "ext_element_id", "profiles", "thresholds", "link",
                "reverse_link", "schedule", "attenuation_table", "clock", "glass", "render",
                "source", "control", "output_dir"},
               d);

    if (j.contains("mode")) {
        const auto m = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
        if (m == "static")
            sc.mode = RunMode::Static;
        else if (m == "adaptive")
            sc.mode = RunMode::Adaptive;
        else
            d.push_back("$.mode: expected \"static\" or \"adaptive\"");
    }
    get_int(j, "$", "streams", sc.streams, d);
    get_num(j, "$", "duration_per_step_s", sc.duration_per_step_s, d);
    get_num(j, "$", "warmup_s", sc.warmup_s, d);
    get_int(j, "$", "seed", sc.seed, d);
    get_int(j, "$", "rtcp_interval_ms", sc.rtcp_interval_ms, d);
    get_int(j, "$", "rtcp_clock_hz", sc.rtcp_clock_hz, d);
    {
        int64_t mtu = static_cast<int64_t>(sc.mtu);
        get_int(j, "$", "mtu", mtu, d);
        if (mtu <= 0)
            d.push_back("$.mtu: must be > 0");
        else
            sc.mtu = static_cast<size_t>(mtu);
    }
    {
        int id = sc.ext_element_id;
        get_int(j, "$", "ext_element_id", id, d);
        sc.ext_element_id = static_cast<uint8_t>(id);
    }

    if (j.contains("profiles")) {
        const auto& jp = j["profiles"];
        check_keys(jp, "$.profiles", {"high", "medium", "low"}, d);
        if (jp.contains("high"))
            load_profile(jp["high"], "$.profiles.high", sc.profiles.high, d);
        if (jp.contains("medium"))
            load_profile(jp["medium"], "$.profiles.medium", sc.profiles.medium, d);
        if (jp.contains("low"))
            load_profile(jp["low"], "$.profiles.low", sc.profiles.low, d);
    }

    if (j.contains("thresholds")) {
        const auto& jt = j["thresholds"];
        check_keys(jt, "$.thresholds", {"fpl_hm_pct", "jit_hm_ticks", "fpl_ml_pct", "jit_ml_ticks"},
                   d);
        get_num(jt, "$.thresholds", "fpl_hm_pct", sc.thresholds.fpl_hm_pct, d);
        get_int(jt, "$.thresholds", "jit_hm_ticks", sc.thresholds.jit_hm_ticks, d);
        get_num(jt, "$.thresholds", "fpl_ml_pct", sc.thresholds.fpl_ml_pct, d);
        get_int(jt, "$.thresholds", "jit_ml_ticks", sc.thresholds.jit_ml_ticks, d);
    }

    const auto load_link = [&](const json& jl, const std::string& path, LinkConfig& link) {
        check_keys(jl, path,
                   {"bandwidth_bps", "propagation_delay_ms", "queue_capacity_bytes", "loss_prob",
                    "delay_jitter_ms"},
                   d);
        get_int(jl, path, "bandwidth_bps", link.bandwidth_bps, d);
        get_ms_as_ns(jl, path, "propagation_delay_ms", link.propagation_delay_ns, d);
        get_int(jl, path, "queue_capacity_bytes", link.queue_capacity_bytes, d);
        get_num(jl, path, "loss_prob", link.loss_prob, d);
        get_ms_as_ns(jl, path, "delay_jitter_ms", link.delay_jitter_max_ns, d);
    };
    if (j.contains("link"))
        load_link(j["link"], "$.link", sc.link);
    if (j.contains("reverse_link")) {
        sc.reverse_link = sc.link; // start from the mirror, then override
        load_link(j["reverse_link"], "$.reverse_link", sc.reverse_link);
        sc.reverse_link_set = true;
    }

    if (j.contains("schedule")) {
        const auto& js = j["schedule"];
        check_keys(js, "$.schedule", {"kind", "steps"}, d);
        const auto kind = js.contains("kind") && js["kind"].is_string()
                              ? js["kind"].get<std::string>()
                              : "";
        if (kind == "none")
            sc.schedule_kind = ScheduleKind::None;
        else if (kind == "bandwidth_mbps")
            sc.schedule_kind = ScheduleKind::BandwidthMbps;
        else if (kind == "attenuation_db")
            sc.schedule_kind = ScheduleKind::AttenuationDb;
        else
            d.push_back("$.schedule.kind: expected \"none\", \"bandwidth_mbps\" or "
                        "\"attenuation_db\"");
        if (js.contains("steps")) {
            if (!js["steps"].is_array())
                d.push_back("$.schedule.steps: expected an array of numbers");
            else
                for (const auto& v : js["steps"]) {
                    if (!v.is_number()) {
                        d.push_back("$.schedule.steps: expected an array of numbers");
                        break;
                    }
                    sc.schedule_steps.push_back(v.get<double>());
                }
        }
    }

    if (j.contains("attenuation_table")) {
        const auto& ja = j["attenuation_table"];
        sc.attenuation_table.clear();
        if (!ja.is_array())
            d.push_back("$.attenuation_table: expected an array of [db, mbps] pairs");
        else
            for (const auto& row : ja) {
                if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                    !row[1].is_number()) {
                    d.push_back("$.attenuation_table: expected an array of [db, mbps] pairs");
                    break;
                }
                sc.attenuation_table.push_back(AttenuationPoint{
                    row[0].get<double>(),
                    static_cast<int64_t>(std::llround(row[1].get<double>() * 1e6))});
            }
    }

    if (j.contains("clock")) {
        const auto& jc = j["clock"];
        check_keys(jc, "$.clock", {"sender_offset_ms", "receiver_offset_ms"}, d);
        get_num(jc, "$.clock", "sender_offset_ms", sc.sender_offset_ms, d);
        get_num(jc, "$.clock", "receiver_offset_ms", sc.receiver_offset_ms, d);
    }

    if (j.contains("glass")) {
        const auto& jg = j["glass"];
        check_keys(jg, "$.glass", {"capture_delay_ms", "display_delay_ms", "decode_display_ms"},
                   d);
        get_ms_as_ns(jg, "$.glass", "capture_delay_ms", sc.glass.capture_delay_ns, d);
        get_ms_as_ns(jg, "$.glass", "display_delay_ms", sc.glass.display_delay_ns, d);
        get_ms_as_ns(jg, "$.glass", "decode_display_ms", sc.glass.decode_display_ns, d);
    }

    if (j.contains("render")) {
        const auto& jr = j["render"];
        check_keys(jr, "$.render",
                   {"min_render_fraction", "freeze_threshold_ms", "freeze_window_fraction"}, d);
        get_num(jr, "$.render", "min_render_fraction", sc.render.min_render_fraction, d);
        get_ms_as_ns(jr, "$.render", "freeze_threshold_ms", sc.render.freeze_threshold_ns, d);
        get_num(jr, "$.render", "freeze_window_fraction", sc.render.freeze_window_fraction, d);
    }

    if (j.contains("source")) {
        const auto& js = j["source"];
        check_keys(js, "$.source", {"start_level", "keyframe_factor", "gop_length", "level_switch"},
                   d);
        if (js.contains("start_level")) {
            const auto s = js["start_level"].is_string() ? js["start_level"].get<std::string>()
                                                         : "";
            if (auto lvl = parse_quality_level(s))
                sc.start_level = *lvl;
            else
                d.push_back("$.source.start_level: expected \"high\", \"medium\" or \"low\"");
        }
        get_num(js, "$.source", "keyframe_factor", sc.keyframe_factor, d);
        get_int(js, "$.source", "gop_length", sc.gop_length, d);
        if (js.contains("level_switch")) {
            const auto s = js["level_switch"].is_string() ? js["level_switch"].get<std::string>()
                                                          : "";
            if (s == "frame")
                sc.switch_policy = LevelSwitchPolicy::NextFrame;
            else if (s == "keyframe")
                sc.switch_policy = LevelSwitchPolicy::NextKeyframe;
            else
                d.push_back("$.source.level_switch: expected \"frame\" or \"keyframe\"");
        }
    }

    if (j.contains("control")) {
        const auto& jc = j["control"];
        check_keys(jc, "$.control", {"min_dwell_ms"}, d);
        get_num(jc, "$.control", "min_dwell_ms", sc.min_dwell_ms, d);
    }

    if (j.contains("output_dir")) {
        if (j["output_dir"].is_string())
            sc.out_dir = j["output_dir"].get<std::string>();
        else
            d.push_back("$.output_dir: expected a string");
    }

    auto inv = validate(sc);
    d.insert(d.end(), inv.begin(), inv.end());
    if (d.empty())
        out = sc;
    return d;
}

Scenario load_scenario_or_throw(const std::string& path) {
    Scenario sc;
    auto diags = load_scenario_file(path, sc);
    if (!diags.empty()) {
        std::string msg = path;
        for (const auto& line : diags)
            msg += "\n  " + line;
        throw Error(Errc::ConfigError, msg);
    }
    return sc;
}

// ---- formatting / CSV ----

std::string format_ms(int64_t ns) {
    const bool neg = ns < 0;
    const uint64_t a = neg ? static_cast<uint64_t>(-ns) : static_cast<uint64_t>(ns);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%s%llu.%06llu", neg ? "-" : "",
                  static_cast<unsigned long long>(a / 1'000'000ull),
                  static_cast<unsigned long long>(a % 1'000'000ull));
    return buf;
}

std::string format_time_s(SimTime ns) {
    const bool neg = ns < 0;
    const uint64_t a = neg ? static_cast<uint64_t>(-ns) : static_cast<uint64_t>(ns);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%llu.%09llu", neg ? "-" : "",
                  static_cast<unsigned long long>(a / 1'000'000'000ull),
                  static_cast<unsigned long long>(a % 1'000'000'000ull));
    return buf;
}

void write_frames_csv(std::ostream& os, const RunResult& r) {
    os << "time_s,stream_id,frame_id,e2e_ms,s2s_ms,level,flag,link_bw_bps,queue_bytes\n";
    for (const auto& f : r.frames) {
        os << format_time_s(f.display_time) << ',' << f.stream_id << ',' << f.frame_id << ','
           << format_ms(f.e2e_ns) << ',' << format_ms(f.s2s_ns) << ',' << to_string(f.level)
           << ',' << to_string(f.flag) << ',' << f.link_bw_bps << ',' << f.queue_bytes << '\n';
    }
}

void write_summary_csv(std::ostream& os, const RunResult& r) {
    os << "step_index,step_value,bandwidth_bps,stream_id,label,mean_e2e_ms,mean_s2s_ms,"
          "displayed,pixelated,frozen_fraction,queue_busy_fraction,packets_received,"
          "occ_high,occ_medium,occ_low\n";
    char num[64];
    for (const auto& s : r.summary) {
        std::snprintf(num, sizeof num, "%.6g", s.step_value);
        os << s.step_index << ',' << num << ',' << s.bandwidth_bps << ',' << s.stream_id << ','
           << s.label << ',';
        if (s.has_means) {
            std::snprintf(num, sizeof num, "%.3f", s.mean_e2e_ms);
            os << num << ',';
            std::snprintf(num, sizeof num, "%.3f", s.mean_s2s_ms);
            os << num << ',';
        } else {
            os << ",,";
        }
        std::snprintf(num, sizeof num, "%.6f", s.frozen_fraction);
        os << s.displayed << ',' << s.pixelated << ',' << num << ',';
        std::snprintf(num, sizeof num, "%.6f", s.queue_busy_fraction);
        os << num << ',' << s.packets_received << ',';
        std::snprintf(num, sizeof num, "%.6f", s.occ_high);
        os << num << ',';
        std::snprintf(num, sizeof num, "%.6f", s.occ_medium);
        os << num << ',';
        std::snprintf(num, sizeof num, "%.6f", s.occ_low);
        os << num << '\n';
    }
}

void write_decisions_csv(std::ostream& os, const RunResult& r) {
    os << "time_s,stream_id,fpl_pct,jitter_ticks,from,to,changed\n";
    char num[32];
    for (const auto& dec : r.decisions) {
        std::snprintf(num, sizeof num, "%.6f", dec.fpl_pct);
        os << format_time_s(dec.time) << ',' << dec.stream_id << ',' << num << ','
           << dec.jitter_ticks << ',' << to_string(dec.from) << ',' << to_string(dec.to) << ','
           << (dec.from != dec.to ? 1 : 0) << '\n';
    }
}

void write_outputs(const RunResult& r, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "frames.csv", std::ios::binary);
        write_frames_csv(os, r);
    }
    {
        std::ofstream os(fs::path(out_dir) / "summary.csv", std::ios::binary);
        write_summary_csv(os, r);
    }
    {
        std::ofstream os(fs::path(out_dir) / "decisions.csv", std::ios::binary);
        write_decisions_csv(os, r);
    }
}

std::string summary_table(const RunResult& r) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-5s %-9s %-10s %-7s %-10s %12s %12s %10s %6s\n", "step",
                  "value", "bw_bps", "stream", "label", "mean_e2e_ms", "mean_s2s_ms", "displayed",
                  "pix");
    os << line;
    for (const auto& s : r.summary) {
        char e2e[32] = "-";
        char s2s[32] = "-";
        if (s.has_means) {
            std::snprintf(e2e, sizeof e2e, "%.2f", s.mean_e2e_ms);
            std::snprintf(s2s, sizeof s2s, "%.2f", s.mean_s2s_ms);
        }
        std::snprintf(line, sizeof line, "%-5d %-9.6g %-10lld %-7d %-10s %12s %12s %10llu %6llu\n",
                      s.step_index, s.step_value, static_cast<long long>(s.bandwidth_bps),
                      s.stream_id, s.label.c_str(), e2e, s2s,
                      static_cast<unsigned long long>(s.displayed),
                      static_cast<unsigned long long>(s.pixelated));
        os << line;
    }
    return os.str();
}

} // namespace rtlat
