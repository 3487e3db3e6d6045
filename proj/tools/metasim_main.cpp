// metasim command line: batch experiment runner. Results go to CSV files in
// the output directory; diagnostics go to stderr. Exit codes: 0 success,
// 1 configuration or usage error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "metasim/harness.hpp"

namespace {

using namespace metasim;

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string format = "csv";
    std::int64_t seed_override = -1;
};

struct LoadedConfig {
    Config cfg;
    std::string hash;
};

LoadedConfig load(const CliOptions& opt) {
    LoadedConfig lc;
    if (opt.config_path.empty()) {
        lc.cfg = default_config();
        lc.hash = "builtin-defaults";
    } else {
        std::ifstream in(opt.config_path);
        if (!in) throw ConfigError("cannot open config file: " + opt.config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        lc.cfg = parse_config(buf.str());
        char hex[32];
        std::snprintf(hex, sizeof hex, "fnv64:%016llx",
                      (unsigned long long)fnv1a(buf.str()));
        lc.hash = hex;
    }
    if (opt.seed_override >= 0)
        lc.cfg.seeds = {std::uint64_t(opt.seed_override)};
    return lc;
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
}

int cmd_validate(const CliOptions& opt) {
    LoadedConfig lc = load(opt);
    std::cout << "config ok (" << lc.hash << ")\n";
    std::cout << "task = " << to_string(lc.cfg.task) << ", seeds = "
              << lc.cfg.seeds.size() << ", probe levels = "
              << lc.cfg.probe.levels.size() << "\n";
    return 0;
}

int cmd_simulate(const CliOptions& opt) {
    LoadedConfig lc = load(opt);
    const Config& cfg = lc.cfg;
    const std::uint64_t seed = cfg.seeds.front();

    EngineState engine = build_monitoring_task(cfg);
    Rng stim_rng(seed_combine(seed, 0x7374696d));
    engine.stimulus = generate_trace(cfg.signals.rate_per_s,
                                     cfg.signals.duration_min_ms,
                                     cfg.signals.duration_max_ms,
                                     cfg.signals.amplitude,
                                     cfg.signals.horizon_ms, stim_rng);
    engine.rng = Rng(seed_combine(seed, 0x656e67));
    run_until(engine, cfg.mech, cfg.signals.horizon_ms);

    const std::filesystem::path dir(opt.out_dir);
    auto events = open_out(dir, "events.csv");
    write_log_csv(engine.log, events);
    auto stimuli = open_out(dir, "stimuli.csv");
    write_trace_csv(engine.stimulus, stimuli);

    auto detections = open_out(dir, "detections.csv");
    detections << "event_id,detected,detect_time_ms,production\n";
    for (const auto& rec : score_detections(engine.stimulus, engine.log)) {
        detections << rec.event_id << ',' << (rec.detected ? 1 : 0) << ',';
        if (rec.detect_time_ms) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", *rec.detect_time_ms);
            detections << buf << ',' << *rec.detecting_production << '\n';
        } else {
            detections << "-,-\n";
        }
    }
    auto manifest = open_out(dir, "manifest.txt");
    write_manifest("simulate", lc.hash, {seed}, manifest);
    return 0;
}

int cmd_threshold(const CliOptions& opt) {
    LoadedConfig lc = load(opt);
    const Config& cfg = lc.cfg;
    const std::uint64_t seed = cfg.seeds.front();

    EngineState task = build_monitoring_task(cfg);
    ProbeContext ctx{task, cfg.mech, cfg.probe.sig};
    ProbeResult result = run_probe(ctx, cfg.probe, seed_combine(seed, 0x70726f6265),
                                   seed_combine(seed, 0x626f6f74));

    const std::filesystem::path dir(opt.out_dir);
    auto psycho = open_out(dir, "psychometric.csv");
    write_psychometric_csv(result.data, psycho);
    auto thresholds = open_out(dir, "thresholds.csv");
    write_thresholds_csv(cfg.name, {{cfg.probe.axis, result}}, thresholds);
    auto manifest = open_out(dir, "manifest.txt");
    write_manifest("threshold", lc.hash, {seed}, manifest);
    return 0;
}

int cmd_stages(const CliOptions& opt) {
    LoadedConfig lc = load(opt);
    const Config& cfg = lc.cfg;

    std::vector<StageReport> reports;
    reports.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds)
        reports.push_back(run_stages_experiment(cfg, seed));

    const std::filesystem::path dir(opt.out_dir);
    auto stages = open_out(dir, "stages.csv");
    write_stages_csv(reports, cfg.probe.axis, stages);
    for (const auto& report : reports) {
        auto events = open_out(
            dir, "training_events_seed" + std::to_string(report.seed) + ".csv");
        write_log_csv(report.training_log, events);
    }
    auto manifest = open_out(dir, "manifest.txt");
    write_manifest("stages", lc.hash, cfg.seeds, manifest);
    return 0;
}

int cmd_ablate(const CliOptions& opt) {
    LoadedConfig lc = load(opt);
    const Config& cfg = lc.cfg;
    const auto arms = standard_ablation_arms(cfg);

    std::vector<AblationReport> reports;
    reports.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds)
        reports.push_back(run_ablation(cfg, arms, seed));

    const std::filesystem::path dir(opt.out_dir);
    auto ablation = open_out(dir, "ablation.csv");
    write_ablation_csv(reports, cfg.probe.axis, ablation);
    auto stimuli = open_out(dir, "stimuli.csv");
    write_ablation_stimuli_csv(cfg, cfg.seeds, stimuli);
    auto manifest = open_out(dir, "manifest.txt");
    write_manifest("ablate", lc.hash, cfg.seeds, manifest);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metasim: production-system simulator measuring how "
                 "production speed-up lowers the detection threshold for "
                 "brief internal signals"};
    app.require_subcommand(1);

    CliOptions opt;
    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", opt.config_path,
                        "experiment config file (omit for built-in defaults)");
        sub->add_option("--seed", opt.seed_override,
                        "override the config seed list with a single seed");
        sub->add_option("--format", opt.format, "output format (csv)");
        if (needs_out)
            sub->add_option("--out", opt.out_dir, "output directory");
    };

    add_common(app.add_subcommand("validate", "check a config and exit"), false);
    add_common(app.add_subcommand("simulate", "raw trace run"), true);
    add_common(app.add_subcommand("threshold",
                                  "constant-stimuli threshold on a fixed config"),
               true);
    add_common(app.add_subcommand("stages", "three-stage training experiment"),
               true);
    add_common(app.add_subcommand("ablate", "mechanism ablation comparison"),
               true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    if (opt.format != "csv") {
        std::cerr << "error: unsupported output format '" << opt.format << "'\n";
        return 1;
    }

    try {
        if (app.got_subcommand("validate")) return cmd_validate(opt);
        if (app.got_subcommand("simulate")) return cmd_simulate(opt);
        if (app.got_subcommand("threshold")) return cmd_threshold(opt);
        if (app.got_subcommand("stages")) return cmd_stages(opt);
        if (app.got_subcommand("ablate")) return cmd_ablate(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
