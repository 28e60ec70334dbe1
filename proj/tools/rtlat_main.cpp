// rtlat: streaming-latency lab runner.
//
// Subcommands:
//   run         execute a scenario over the simulated link or UDP loopback
//   validate    check a scenario file without running it
//   report-diff per-sample s2s - e2e over a frames.csv
//   presets     print the built-in profiles, thresholds and attenuation map

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "rtlat/errors.hpp"
#include "rtlat/netsim.hpp"
#include "rtlat/report.hpp"
#include "rtlat/scenario.hpp"

using namespace rtlat;

namespace {

std::string resolve_out_dir(const std::string& flag_value, const Scenario& sc) {
    if (!flag_value.empty())
        return flag_value;
    if (!sc.out_dir.empty())
        return sc.out_dir;
    if (const char* env = std::getenv("RTLAT_OUT"); env && *env)
        return env;
    return "out";
}

int cmd_run(const std::string& scenario_path, const std::string& out_flag,
            const std::string& mode_flag, const std::string& transport,
            std::optional<uint64_t> seed_flag) {
    Scenario sc = scenario_path.empty() ? Scenario{} : load_scenario_or_throw(scenario_path);
    if (seed_flag)
        sc.seed = *seed_flag;
    if (mode_flag == "static")
        sc.mode = RunMode::Static;
    else if (mode_flag == "adaptive")
        sc.mode = RunMode::Adaptive;

    RunResult result;
    if (transport == "udp") {
        result = run_scenario_udp(sc, sc.duration_per_step_s);
    } else {
        result = run_scenario(sc);
    }

    const std::string out_dir = resolve_out_dir(out_flag, sc);
    write_outputs(result, out_dir);
    std::printf("%s", summary_table(result).c_str());
    std::printf("outputs: %s/{frames,summary,decisions}.csv\n", out_dir.c_str());
    return 0;
}

int cmd_validate(const std::string& scenario_path) {
    Scenario sc;
    const auto diags = load_scenario_file(scenario_path, sc);
    if (diags.empty()) {
        std::printf("ok: %s\n", scenario_path.c_str());
        return 0;
    }
    std::fprintf(stderr, "%s: %zu problem(s)\n", scenario_path.c_str(), diags.size());
    for (const auto& d : diags)
        std::fprintf(stderr, "  %s\n", d.c_str());
    return 1;
}

int cmd_report_diff(const std::string& csv_path) {
    const DiffReport rep = report_diff_file(csv_path);
    std::printf("samples: %zu\n", rep.samples);
    if (rep.samples > 0) {
        std::printf("min_diff_ms: %s\n", format_ms(rep.min_diff_ns).c_str());
        std::printf("max_diff_ms: %s\n", format_ms(rep.max_diff_ns).c_str());
        std::printf("mean_diff_ms: %.6f\n", rep.mean_ms());
        std::printf("constant: %s\n", rep.constant() ? "yes" : "no");
    }
    return 0;
}

int cmd_presets() {
    const ProfileSet profiles;
    const Thresholds th;
    std::printf("video profiles:\n");
    for (auto level : {QualityLevel::High, QualityLevel::Medium, QualityLevel::Low}) {
        const auto& p = profiles.at(level);
        std::printf("  %-6s  %s  %.1f Mbps  %.0f fps\n", to_string(level),
                    p.resolution_tag.c_str(), static_cast<double>(p.bitrate_bps) / 1e6,
                    p.framerate_fps);
    }
    std::printf("thresholds:\n");
    std::printf("  high-medium  fpl %.1f %%  jitter %u ticks\n", th.fpl_hm_pct, th.jit_hm_ticks);
    std::printf("  medium-low   fpl %.1f %%  jitter %u ticks\n", th.fpl_ml_pct, th.jit_ml_ticks);
    std::printf("attenuation presets:\n");
    for (const auto& pt : default_attenuation_table()) {
        if (pt.bandwidth_bps == 0)
            std::printf("  %4.0f dB  connection lost\n", pt.db);
        else
            std::printf("  %4.0f dB  %.1f Mbps\n", pt.db, static_cast<double>(pt.bandwidth_bps) / 1e6);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rtlat: RTP streaming-latency lab"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir;
    std::string mode;
    std::string transport = "sim";
    std::optional<uint64_t> seed;

    auto* run = app.add_subcommand("run", "run a scenario");
    run->add_option("--scenario", scenario_path, "scenario file (defaults apply when omitted)");
    run->add_option("--out", out_dir, "output directory (or RTLAT_OUT, or ./out)");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--mode", mode, "override the mode")
        ->check(CLI::IsMember({"static", "adaptive"}));
    run->add_option("--transport", transport, "sim (deterministic) or udp (loopback sockets)")
        ->check(CLI::IsMember({"sim", "udp"}));

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "validate a scenario file");
    validate_cmd->add_option("--scenario", validate_path, "scenario file")->required();

    std::string csv_path;
    auto* diff = app.add_subcommand("report-diff", "s2s - e2e series over a frames.csv");
    diff->add_option("--frames", csv_path, "frames.csv from a run")->required();

    auto* presets = app.add_subcommand("presets", "print built-in defaults");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(scenario_path, out_dir, mode, transport, seed);
        if (validate_cmd->parsed())
            return cmd_validate(validate_path);
        if (diff->parsed())
            return cmd_report_diff(csv_path);
        if (presets->parsed())
            return cmd_presets();
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
