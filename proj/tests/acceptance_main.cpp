// Acceptance suite: exercises every hard requirement end to end and prints
// one [PASS]/[FAIL] line per criterion. Exit status 0 only if all pass.
//
//  1. timing constants (50 ms cycle; 34-44 / 59-73 ms complexity ranges)
//  2. fire-when-ready accounting, before and after compilation (exact)
//  3. compilation soundness: child == parent pair on 1000 random chunks
//  4. utility convergence: exactly geometric, 1e-12 relative
//  5. psychometric recovery: median midpoint error <= 5%
//  6. mechanism ablation: each mechanism lowers the duration threshold with
//     a 95% bootstrap CI excluding zero on >= 8 of 10 seeds
//  7. three-stage trajectory with a falling threshold on >= 6 of 10 seeds
//  8. byte-identical reruns of every CLI subcommand

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metasim/harness.hpp"

using namespace metasim;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
                detail.c_str());
    if (!ok) ++failures;
}

// --- criterion 1 -----------------------------------------------------------

void criterion_timing_constants() {
    MechanismConfig cfg;
    cfg.noise_scale = 0.0;
    Rng rng(1);
    Production p;
    bool ok = firing_duration(p, cfg, rng) == 50.0 && cfg.cycle_time_ms == 50.0;

    cfg.complexity_timing = true;
    Production simple;
    simple.complexity = Complexity::Simple;
    Production complex_rule;
    complex_rule.complexity = Complexity::Complex;
    double lo_s = 1e9, hi_s = -1e9, lo_c = 1e9, hi_c = -1e9;
    for (int i = 0; i < 10000; ++i) {
        const double ds = firing_duration(simple, cfg, rng);
        const double dc = firing_duration(complex_rule, cfg, rng);
        lo_s = std::min(lo_s, ds);
        hi_s = std::max(hi_s, ds);
        lo_c = std::min(lo_c, dc);
        hi_c = std::max(hi_c, dc);
    }
    ok = ok && lo_s >= 34.0 && hi_s <= 44.0 && lo_c >= 59.0 && hi_c <= 73.0;

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "timing constants: cycle 50 ms; simple [%.2f, %.2f] in "
                  "[34, 44]; complex [%.2f, %.2f] in [59, 73]",
                  lo_s, hi_s, lo_c, hi_c);
    report(1, ok, buf);
}

// --- criterion 2 -----------------------------------------------------------

void criterion_fire_when_ready() {
    Config cfg = default_config();
    cfg.task = TaskKind::MonitorOnly;
    cfg.mech.noise_scale = 0.0;
    cfg.mech.complexity_timing = false;
    cfg.mech.compilation_enabled = false;
    cfg.mech.focus_mode = FocusMode::Narrow;
    cfg.gate.gate_sd = 0.0;

    // first complete episode: first fire-start of the chain head to the
    // first fire-end of the marking production
    auto span_of = [](const EventLog& log, const char* first_rule,
                      const char* last_rule) {
        double start = -1, end = -1;
        for (const auto& e : log.entries) {
            if (e.kind == EventKind::FireStart && e.production == first_rule &&
                start < 0)
                start = e.time_ms;
            if (e.kind == EventKind::FireEnd && e.production == last_rule &&
                end < 0)
                end = e.time_ms;
        }
        return std::pair{start, end};
    };

    // Novice pair: sample at t=100 triggers retrieval; instruction arrives
    // after the full latency; apply executes one cycle later.
    EngineState novice = build_monitoring_task(cfg);
    novice.stimulus = SignalTrace{{{"e0", 100.0, 450.0, 1.0}}, 1000.0};
    novice.rng = Rng(7);
    run_until(novice, cfg.mech, 1000.0);
    auto [n_start, n_end] = span_of(novice.log, kRetrieveRule, kApplyRule);
    const double pair_episode = n_end - n_start;
    const double expected_pair =
        cfg.mech.default_latency_ms + 2.0 * cfg.mech.cycle_time_ms;
    bool ok = n_start == 100.0 && pair_episode == expected_pair;

    // After compilation the same episode is a single firing.
    EngineState expert = build_monitoring_task(cfg);
    const Production* retrieve = expert.find_rule(kRetrieveRule);
    const Production* apply = expert.find_rule(kApplyRule);
    Production child =
        compile_pair(*retrieve, *apply, expert.memory.entries[0].chunk);
    child.utility = 10.0;  // outranks the novice chain at zero noise
    expert.add_rule(child);
    expert.stimulus = SignalTrace{{{"e0", 100.0, 450.0, 1.0}}, 1000.0};
    expert.rng = Rng(7);
    run_until(expert, cfg.mech, 1000.0);
    auto [c_start, c_end] = span_of(expert.log, child.id.c_str(), child.id.c_str());
    const double child_episode = c_end - c_start;
    ok = ok && c_start == 100.0 && child_episode == cfg.mech.cycle_time_ms;

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "fire-when-ready: pair episode %.0f ms == latency + 2*cycle "
                  "(%.0f); compiled episode %.0f ms == 1*cycle (exact)",
                  pair_episode, expected_pair, child_episode);
    report(2, ok, buf);
}

// --- criterion 3 -----------------------------------------------------------

Production soundness_requester() {
    Production p;
    p.id = "fetch";
    p.conditions = {
        BufferPattern{"goal", false, "goal", {SlotTest::eq("phase", std::string("start"))}},
        BufferPattern{"retrieval", true, "", {}}};
    p.actions = {
        BufferAction::request("instr", {{"task", ValueRef::of(std::string("monitor"))}}),
        BufferAction::modify("goal", "phase", ValueRef::of(SlotValue(std::string("waiting"))))};
    return p;
}

Production soundness_consumer(bool second_binding) {
    Production p;
    p.id = "act";
    p.conditions = {
        BufferPattern{"goal", false, "goal", {SlotTest::eq("phase", std::string("waiting"))}},
        BufferPattern{"retrieval", false, "instr", {SlotTest::bind("payload", "v")}}};
    p.actions = {
        BufferAction::modify("goal", "result", ValueRef::variable("v")),
        BufferAction::modify("goal", "phase", ValueRef::of(SlotValue(std::string("done")))),
        BufferAction::clear("retrieval")};
    if (second_binding) {
        p.conditions[1].tests.push_back(SlotTest::bind("extra0", "w"));
        p.actions.push_back(
            BufferAction::modify("goal", "note", ValueRef::variable("w")));
    }
    return p;
}

void criterion_compilation_soundness() {
    Rng rng(612);
    MechanismConfig cfg;
    cfg.noise_scale = 0.0;
    const std::vector<std::string> symbols = {"alpha", "beta", "gamma", "delta"};
    int mismatches = 0;
    const int n = 1000;

    for (int trial = 0; trial < n; ++trial) {
        Chunk instr;
        instr.name = "instr-1";
        instr.type_name = "instr";
        instr.set_slot("task", std::string("monitor"));
        instr.set_slot("payload", rng.uniform01() < 0.5
                                      ? SlotValue(symbols[rng.uniform_int(0, 3)])
                                      : SlotValue(rng.uniform(-100.0, 100.0)));
        const int extra = rng.uniform_int(0, 3);
        for (int k = 0; k < extra; ++k)
            instr.set_slot("extra" + std::to_string(k), symbols[rng.uniform_int(0, 3)]);

        Production p1 = soundness_requester();
        Production p2 = soundness_consumer(extra > 0 && rng.uniform01() < 0.5);

        EngineState base;
        Chunk g;
        g.name = "g";
        g.type_name = "goal";
        g.set_slot("task", std::string("monitor"));
        g.set_slot("phase", std::string("start"));
        base.buffer("goal").content = g;
        add_chunk(base.memory, instr, 1.0);

        EngineState pair_engine = base;
        pair_engine.add_rule(p1);
        pair_engine.add_rule(p2);
        EngineState child_engine = base;
        child_engine.add_rule(compile_pair(p1, p2, instr));

        run_until(pair_engine, cfg, 600.0);
        run_until(child_engine, cfg, 600.0);

        for (const auto& [name, buf] : pair_engine.buffers) {
            const Buffer* other = child_engine.find_buffer(name);
            const bool same =
                other && buf.content.has_value() == other->content.has_value() &&
                (!buf.content || *buf.content == *other->content);
            if (!same) {
                ++mismatches;
                break;
            }
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "compilation soundness: %d/%d randomized chunks give "
                  "identical final buffers (two-path oracle)",
                  n - mismatches, n);
    report(3, mismatches == 0, buf);
}

// --- criterion 4 -----------------------------------------------------------

void criterion_utility_convergence() {
    Rng rng(515);
    int bad = 0;
    for (int draw = 0; draw < 50; ++draw) {
        UtilityParams params;
        params.alpha = rng.uniform(0.05, 1.0);
        params.reward_magnitude = rng.uniform(-5.0, 15.0);
        params.time_cost_per_ms = rng.uniform(0.0, 0.05);
        const double elapsed = rng.uniform(0.0, 500.0);
        const double r_eff =
            params.reward_magnitude - params.time_cost_per_ms * elapsed;

        Production p;
        p.id = "p";
        p.utility = rng.uniform(-10.0, 10.0);
        const double gap0 = std::abs(p.utility - r_eff);
        for (int nstep = 1; nstep <= 30; ++nstep) {
            p = update_utility(p, params, elapsed);
            const double expected = std::pow(1.0 - params.alpha, nstep) * gap0;
            if (std::abs(std::abs(p.utility - r_eff) - expected) >
                1e-12 * std::max(1.0, expected))
                ++bad;
        }
    }
    report(4, bad == 0,
           "utility convergence: |U_n - R_eff| = (1-alpha)^n |U_0 - R_eff| to "
           "1e-12 relative over 50 random parameter draws");
}

// --- criterion 5 -----------------------------------------------------------

void criterion_psychometric_recovery() {
    Rng rng(31415);
    const std::vector<double> levels = {60, 80, 100, 110, 130, 150, 180, 220};
    const double true_mid = 120.0, true_slope = 0.05;
    std::vector<double> errors;
    for (int rep = 0; rep < 100; ++rep) {
        PsychometricData data;
        data.axis = StimulusAxis::Duration;
        data.levels = levels;
        data.trials_per_level = 500;
        LogisticFit truth{true_mid, true_slope, 0.0, 0.0, 0.0};
        for (double level : levels)
            data.detect_counts.push_back(rng.binomial(500, truth.probability(level)));
        errors.push_back(std::abs(fit_logistic(data).midpoint - true_mid) / true_mid);
    }
    std::sort(errors.begin(), errors.end());
    const double median = errors[errors.size() / 2];
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "psychometric recovery: median midpoint error %.2f%% over "
                  "100 synthetic datasets (limit 5%%)",
                  100.0 * median);
    report(5, median <= 0.05, buf);
}

// --- criterion 6 -----------------------------------------------------------

void criterion_ablation() {
    Config cfg = default_config();
    const auto arms = standard_ablation_arms(cfg);
    const int n_seeds = int(cfg.seeds.size());

    std::vector<int> wins(arms.size(), 0);
    for (std::uint64_t seed : cfg.seeds) {
        AblationReport report_for_seed = run_ablation(cfg, arms, seed);
        for (std::size_t i = 1; i < report_for_seed.rows.size(); ++i)
            if (*report_for_seed.rows[i].diff_hi < 0.0) ++wins[i];
    }
    bool ok = true;
    std::string detail = "ablation (duration threshold lower, 95% CI "
                         "excluding 0):";
    for (std::size_t i = 1; i < arms.size(); ++i) {
        ok = ok && wins[i] >= 8;
        detail += " " + arms[i].name + " " + std::to_string(wins[i]) + "/" +
                  std::to_string(n_seeds);
    }
    detail += " (need >= 8 each)";
    report(6, ok, detail);
}

// --- criterion 7 -----------------------------------------------------------

void criterion_stages() {
    Config cfg = default_config();
    int full_sequence = 0, threshold_drop = 0, monotone = 0;
    const int n_seeds = int(cfg.seeds.size());

    for (std::uint64_t seed : cfg.seeds) {
        StageReport r = run_stages_experiment(cfg, seed);
        bool saw_novice = false, saw_inter = false, saw_expert = false;
        bool ordered = true, mono = true;
        int best = 0;
        double prev_f = -1.0;
        for (const auto& row : r.rows) {
            const int s = row.stage == StageLabel::Novice        ? 0
                          : row.stage == StageLabel::Intermediate ? 1
                                                                  : 2;
            if (s == 0) saw_novice = true;
            if (s == 1 && saw_novice) saw_inter = true;
            if (s == 2 && saw_inter) saw_expert = true;
            if (s < best) ordered = false;
            best = std::max(best, s);
            if (row.compiled_frac < prev_f - 0.05) mono = false;  // smoothed
            prev_f = row.compiled_frac;
        }
        if (saw_novice && saw_inter && saw_expert && ordered) ++full_sequence;
        if (mono) ++monotone;
        const auto& first = r.rows.front().probe.thr;
        const auto& last = r.rows.back().probe.thr;
        if (last.ci_high < first.ci_low) ++threshold_drop;
    }

    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "three-stage trajectory: full novice->intermediate->expert "
                  "on %d/%d seeds, monotone compiled fraction on %d/%d, final "
                  "threshold below first (non-overlapping CIs) on %d/%d "
                  "(majorities required)",
                  full_sequence, n_seeds, monotone, n_seeds, threshold_drop,
                  n_seeds);
    report(7,
           2 * full_sequence > n_seeds && 2 * monotone > n_seeds &&
               2 * threshold_drop > n_seeds,
           buf);
}

// --- criterion 8 -----------------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(METASIM_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void criterion_determinism() {
    const fs::path tmp = fs::temp_directory_path() / "metasim-acceptance";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const fs::path cfg_path = tmp / "small.cfg";
    {
        std::ofstream out(cfg_path);
        out << "[experiment]\n"
               "name = acceptance-small\n"
               "seeds = 3, 4\n"
               "[engine]\n"
               "focus = narrow\n"
               "compilation = on\n"
               "[training]\n"
               "n_trials = 6\n"
               "probe_every = 3\n"
               "pretrain_trials = 6\n"
               "[probe]\n"
               "levels = 20, 60, 150, 320\n"
               "trials = 40\n"
               "n_boot = 100\n"
               "horizon_ms = 600\n";
    }

    bool ok = run_cli("validate --config " + cfg_path.string()) == 0;
    int mismatched_files = 0;
    for (const std::string sub : {"simulate", "threshold", "stages", "ablate"}) {
        const fs::path a = tmp / (sub + "-a");
        const fs::path b = tmp / (sub + "-b");
        ok = ok && run_cli(sub + " --config " + cfg_path.string() + " --out " +
                           a.string()) == 0;
        ok = ok && run_cli(sub + " --config " + cfg_path.string() + " --out " +
                           b.string()) == 0;
        if (!fs::exists(a)) {
            ok = false;
            continue;
        }
        for (const auto& entry : fs::directory_iterator(a)) {
            const fs::path other = b / entry.path().filename();
            if (!fs::exists(other) ||
                slurp(entry.path()) != slurp(other))
                ++mismatched_files;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "determinism: simulate/threshold/stages/ablate reruns "
                  "byte-identical (%d mismatched files)",
                  mismatched_files);
    report(8, ok && mismatched_files == 0, buf);
    fs::remove_all(tmp);
}

}  // namespace

int main() {
    std::printf("metasim acceptance suite\n");
    criterion_timing_constants();
    criterion_fire_when_ready();
    criterion_compilation_soundness();
    criterion_utility_convergence();
    criterion_psychometric_recovery();
    criterion_ablation();
    criterion_stages();
    criterion_determinism();
    if (failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
}
