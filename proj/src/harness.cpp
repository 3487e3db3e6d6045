#include "metasim/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace metasim {

namespace {

// Seed-stream tags; each derived stream is independent of the others.
constexpr std::uint64_t kTagTrialStimulus = 0x7374696d;   // training stimuli
constexpr std::uint64_t kTagTrialEngine = 0x656e67;       // engine draws
constexpr std::uint64_t kTagProbeStimuli = 0x70726f6265;  // probe stimulus set
constexpr std::uint64_t kTagBootstrap = 0x626f6f74;
constexpr std::uint64_t kTagPretrain = 0x707265;
constexpr std::uint64_t kTagDiff = 0x64696666;

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Chunk make_initial_goal() {
    Chunk goal;
    goal.name = "goal-monitor";
    goal.type_name = "goal";
    goal.set_slot("task", std::string("monitor"));
    goal.set_slot("state", std::string("busy"));
    goal.set_slot("step", std::string("start"));
    return goal;
}

// Fresh trial: clock, log, buffers and stimulus reset; rules, utilities,
// declarative memory and compilation records persist (they are the agent).
void reset_for_trial(EngineState& e) {
    e.clock_ms = 0.0;
    e.log = EventLog{};
    e.stimulus = SignalTrace{};
    e.pending_delivery.reset();
    for (auto& [name, buf] : e.buffers) {
        buf.content.reset();
        buf.pending_request.reset();
    }
    e.buffer("goal").content = make_initial_goal();
}

EngineState probe_snapshot(const EngineState& agent) {
    EngineState snap = agent;
    reset_for_trial(snap);
    return snap;
}

std::uint64_t probe_base_seed(std::uint64_t seed) {
    return seed_combine(seed, kTagProbeStimuli);
}

}  // namespace

EngineState build_monitoring_task(const Config& cfg, bool monitors_simple) {
    EngineState e;
    e.learning = cfg.training.utility;
    e.gate = cfg.gate;
    e.buffer("goal").content = make_initial_goal();

    Chunk instruction;
    instruction.name = kInstructionChunk;
    instruction.type_name = "instruction";
    instruction.set_slot("task", std::string("monitor"));
    instruction.set_slot("action", std::string("mark"));
    add_chunk(e.memory, instruction, 1.0);
    for (const auto& [chunk, activation] : cfg.extra_chunks)
        if (!e.memory.find(chunk.name)) add_chunk(e.memory, chunk, activation);

    const Complexity monitor_complexity =
        monitors_simple ? Complexity::Simple : Complexity::Complex;

    // Novice path, step 1: a felt sample prompts retrieval of the
    // meta-instruction. The goal step gates the chain, so a compiled rule
    // (which inherits step=start) has to outcompete this one directly.
    Production retrieve;
    retrieve.id = kRetrieveRule;
    retrieve.complexity = monitor_complexity;
    retrieve.is_monitor = true;
    retrieve.utility = 1.0;
    retrieve.conditions = {
        BufferPattern{"goal", false, "goal",
                      {SlotTest::eq("task", std::string("monitor")),
                       SlotTest::eq("step", std::string("start"))}},
        BufferPattern{"interoceptive", false, kAffectSampleType, {}},
        BufferPattern{"retrieval", true, "", {}},
    };
    retrieve.actions = {
        BufferAction::request("instruction",
                              {{"task", ValueRef::of(std::string("monitor"))}}),
        BufferAction::modify("goal", "step", ValueRef::of(std::string("waiting"))),
    };
    e.add_rule(retrieve);

    // Novice path, step 2: execute the delivered instruction against the
    // current sample. Harvesting clears the retrieval buffer and re-arms the
    // chain, so the next episode retrieves again.
    Production apply;
    apply.id = kApplyRule;
    apply.complexity = monitor_complexity;
    apply.is_monitor = true;
    apply.utility = 1.0;
    apply.conditions = {
        BufferPattern{"goal", false, "goal",
                      {SlotTest::eq("task", std::string("monitor")),
                       SlotTest::eq("step", std::string("waiting"))}},
        BufferPattern{"retrieval", false, "instruction", {SlotTest::bind("action", "act")}},
        BufferPattern{"interoceptive", false, kAffectSampleType, {SlotTest::bind("event", "ev")}},
    };
    apply.actions = {
        BufferAction::mark_detection(ValueRef::variable("ev")),
        BufferAction::modify("goal", "last-action", ValueRef::variable("act")),
        BufferAction::modify("goal", "step", ValueRef::of(std::string("start"))),
        BufferAction::clear("retrieval"),
    };
    e.add_rule(apply);

    if (cfg.task == TaskKind::MonitorWithDistractors) {
        for (int k = 0; k < cfg.distractor_count; ++k) {
            Production d;
            d.id = "distractor-" + std::to_string(k);
            d.complexity = Complexity::Simple;
            d.is_monitor = false;
            d.utility = 1.0;
            d.conditions = {BufferPattern{
                "goal", false, "goal", {SlotTest::eq("state", std::string("busy"))}}};
            d.actions = {
                BufferAction::modify("goal", "wander", ValueRef::of(double(k)))};
            e.add_rule(d);
        }
    }
    return e;
}

ProbeResult run_probe(const ProbeContext& ctx, const ProbeProtocol& protocol,
                      std::uint64_t base_seed, std::uint64_t boot_seed) {
    // Guess/lapse are estimated: an amplitude gate below certainty caps the
    // detection ceiling, which would otherwise bias the midpoint toward the
    // lowest level.
    FitOptions opt;
    opt.estimate_guess_lapse = true;

    ProbeResult result;
    result.data = run_constant_stimuli(ctx, protocol.axis, protocol.levels,
                                       protocol.trials_per_level, base_seed);
    result.fit = fit_logistic(result.data, opt);
    Rng boot(boot_seed);
    result.thr = bootstrap_threshold(result.data, protocol.criterion,
                                     protocol.n_boot, boot, opt);
    return result;
}

namespace {

// Most recent fire-start of `production` at or before `time`.
const LogEntry* last_fire_start(const EventLog& log, const std::string& production,
                                double time) {
    for (auto it = log.entries.rbegin(); it != log.entries.rend(); ++it) {
        if (it->kind != EventKind::FireStart) continue;
        if (it->production != production) continue;
        if (it->time_ms <= time) return &*it;
    }
    return nullptr;
}

const LogEntry* last_retrieval_complete(const EventLog& log, double time) {
    for (auto it = log.entries.rbegin(); it != log.entries.rend(); ++it)
        if (it->kind == EventKind::RetrievalComplete && it->time_ms <= time)
            return &*it;
    return nullptr;
}

void reward_production(EngineState& agent, const std::string& id,
                       double fired_at, double reward_at) {
    Production* rule = agent.find_rule(id);
    if (!rule) return;
    const double elapsed = std::max(0.0, reward_at - fired_at);
    *rule = update_utility(std::move(*rule), agent.learning, elapsed);
    char detail[96];
    std::snprintf(detail, sizeof detail, "utility=%.6g;elapsed=%.3f",
                  rule->utility, elapsed);
    agent.log.append(agent.clock_ms, EventKind::Utility, id, detail);
}

}  // namespace

TrialSummary run_training_trial(EngineState& agent, const Config& cfg,
                                int trial_index, std::uint64_t trial_seed,
                                std::vector<EpisodeRecord>& episodes) {
    Rng stim_rng(seed_combine(trial_seed, kTagTrialStimulus));
    SignalTrace trace = generate_trace(
        cfg.signals.rate_per_s, cfg.signals.duration_min_ms,
        cfg.signals.duration_max_ms, cfg.signals.amplitude,
        cfg.signals.horizon_ms, stim_rng);

    reset_for_trial(agent);
    agent.stimulus = std::move(trace);
    agent.rng = Rng(seed_combine(trial_seed, kTagTrialEngine));
    run_until(agent, cfg.mech, cfg.signals.horizon_ms);

    TrialSummary summary;
    summary.events = int(agent.stimulus.events.size());

    auto records = score_detections(agent.stimulus, agent.log);
    for (const auto& rec : records) {
        if (!rec.detected) continue;
        ++summary.detections;
        const std::string& detector = *rec.detecting_production;
        const double t_reward = *rec.detect_time_ms;

        const LogEntry* fire = last_fire_start(agent.log, detector, t_reward);
        if (!fire) continue;
        reward_production(agent, detector, fire->time_ms, t_reward);

        // Credit the retrieval requester when the detection ran off a
        // delivered chunk (the novice path).
        if (fire->detail.find("retrieval") != std::string::npos) {
            if (const LogEntry* delivery =
                    last_retrieval_complete(agent.log, fire->time_ms)) {
                const std::string& requester = delivery->production;
                if (const LogEntry* requester_fire =
                        last_fire_start(agent.log, requester, delivery->time_ms))
                    reward_production(agent, requester, requester_fire->time_ms,
                                      t_reward);
            }
        }

        const Production* rule = agent.find_rule(detector);
        episodes.push_back({trial_index, t_reward, detector,
                            rule && rule->provenance == Provenance::Compiled});
    }
    return summary;
}

StageReport run_stages_experiment(const Config& cfg, std::uint64_t seed) {
    EngineState agent = build_monitoring_task(cfg);
    std::vector<EpisodeRecord> episodes;
    StageReport report;
    report.seed = seed;

    const std::uint64_t probe_stimuli = probe_base_seed(seed);
    int probe_index = 0;
    auto make_row = [&](int at_trial, FocusMode focus) {
        MechanismConfig probe_mech = cfg.mech;
        probe_mech.focus_mode = focus;
        ProbeContext ctx{probe_snapshot(agent), probe_mech, cfg.probe.sig};
        StageProbeRow row;
        row.probe = run_probe(ctx, cfg.probe, probe_stimuli,
                              seed_combine(seed, kTagBootstrap, probe_index));
        row.probe_index = probe_index++;
        row.at_trial = at_trial;
        row.episodes_seen = int(episodes.size());
        const std::size_t window =
            std::min<std::size_t>(episodes.size(), cfg.training.stage_window);
        std::span<const EpisodeRecord> recent(episodes.data() + episodes.size() - window,
                                              window);
        row.compiled_frac = compiled_fraction(recent);
        row.stage = recent.empty() ? StageLabel::Novice : classify_stage(recent);
        row.focus = focus;
        return row;
    };

    report.rows.push_back(make_row(0, cfg.mech.focus_mode));
    for (int trial = 1; trial <= cfg.training.n_trials; ++trial) {
        run_training_trial(agent, cfg, trial, seed_combine(seed, 0x7472, trial),
                           episodes);
        // stitch the per-trial log into one replayable training trace
        const double offset = double(trial - 1) * cfg.signals.horizon_ms;
        for (const auto& e : agent.log.entries)
            report.training_log.append(offset + e.time_ms, e.kind, e.production,
                                       e.detail);
        if (trial % cfg.training.probe_every == 0 || trial == cfg.training.n_trials)
            report.rows.push_back(make_row(trial, cfg.mech.focus_mode));
    }

    // Re-probe the trained policy with the focus filter dropped: compiled
    // monitoring should stand without mechanism 3.
    if (cfg.mech.focus_mode == FocusMode::Narrow)
        report.expert_open_probe = make_row(cfg.training.n_trials, FocusMode::Open);
    return report;
}

std::vector<AblationArm> standard_ablation_arms(const Config& cfg) {
    MechanismConfig base = cfg.mech;
    base.clock_scale = 1.0;
    base.compilation_enabled = false;
    base.focus_mode = FocusMode::Open;
    base.complexity_timing = false;

    std::vector<AblationArm> arms;
    arms.push_back({"baseline", base, false});

    MechanismConfig m1 = base;
    m1.clock_scale = 0.5;
    arms.push_back({"clock-scale", m1, false});

    MechanismConfig m2 = base;
    m2.compilation_enabled = true;
    arms.push_back({"compilation", m2, false});

    MechanismConfig m3 = base;
    m3.focus_mode = FocusMode::Narrow;
    arms.push_back({"narrow-focus", m3, false});

    MechanismConfig m4 = base;
    m4.complexity_timing = true;
    arms.push_back({"complexity-timing", m4, true});

    return arms;
}

AblationReport run_ablation(const Config& cfg,
                            const std::vector<AblationArm>& arms,
                            std::uint64_t seed) {
    if (arms.size() < 2)
        throw std::invalid_argument("ablation needs a baseline plus >= 1 variant");
    for (const auto& arm : arms) {
        auto errors = validate(arm.mech);
        if (!errors.empty())
            throw std::invalid_argument("ablation arm '" + arm.name +
                                        "' invalid: " + errors.front());
    }

    AblationReport report;
    report.seed = seed;
    std::vector<PsychometricData> datasets;

    const std::uint64_t shared_stimuli = probe_base_seed(seed);
    for (std::size_t ai = 0; ai < arms.size(); ++ai) {
        const AblationArm& arm = arms[ai];
        EngineState task = build_monitoring_task(cfg, arm.monitors_simple);

        // Compilation only exists as the product of practice, so arms that
        // enable it train first (under Narrow focus, the practice condition);
        // the probe itself is frozen-policy for every arm.
        if (arm.mech.compilation_enabled && cfg.training.pretrain_trials > 0) {
            Config practice = cfg;
            practice.mech = arm.mech;
            practice.mech.focus_mode = FocusMode::Narrow;
            std::vector<EpisodeRecord> scratch;
            for (int t = 1; t <= cfg.training.pretrain_trials; ++t)
                run_training_trial(task, practice, t,
                                   seed_combine(seed, kTagPretrain, t), scratch);
        }

        ProbeContext ctx{probe_snapshot(task), arm.mech, cfg.probe.sig};
        AblationRow row;
        row.condition = arm.name;
        row.probe = run_probe(ctx, cfg.probe, shared_stimuli,
                              seed_combine(seed, kTagBootstrap, ai));
        datasets.push_back(row.probe.data);
        report.rows.push_back(std::move(row));
    }

    // Paired-bootstrap CI on the threshold difference from baseline.
    const PsychometricData& base_data = datasets.front();
    for (std::size_t ai = 1; ai < arms.size(); ++ai) {
        AblationRow& row = report.rows[ai];
        row.diff = row.probe.thr.level_at_criterion -
                   report.rows.front().probe.thr.level_at_criterion;

        Rng rng(seed_combine(seed, kTagDiff, ai));
        FitOptions opt;
        opt.estimate_guess_lapse = true;
        std::vector<double> diffs;
        int degenerate = 0;
        PsychometricData rb = base_data, rv = datasets[ai];
        for (int b = 0; b < cfg.probe.n_boot; ++b) {
            for (std::size_t i = 0; i < base_data.levels.size(); ++i) {
                rb.detect_counts[i] = rng.binomial(
                    base_data.trials_per_level,
                    double(base_data.detect_counts[i]) / base_data.trials_per_level);
                rv.detect_counts[i] = rng.binomial(
                    datasets[ai].trials_per_level,
                    double(datasets[ai].detect_counts[i]) /
                        datasets[ai].trials_per_level);
            }
            try {
                const double tb = threshold(fit_logistic(rb, opt), cfg.probe.criterion)
                                      .level_at_criterion;
                const double tv = threshold(fit_logistic(rv, opt), cfg.probe.criterion)
                                      .level_at_criterion;
                diffs.push_back(tv - tb);
            } catch (const DegenerateFitError&) {
                ++degenerate;
            }
        }
        if (degenerate > cfg.probe.n_boot / 5)
            throw std::runtime_error("ablation bootstrap unstable for arm '" +
                                     arms[ai].name + "'");
        std::sort(diffs.begin(), diffs.end());
        auto pct = [&](double q) {
            const double idx = q * double(diffs.size() - 1);
            const std::size_t i0 = std::size_t(idx);
            const std::size_t i1 = std::min(i0 + 1, diffs.size() - 1);
            const double w = idx - double(i0);
            return (1.0 - w) * diffs[i0] + w * diffs[i1];
        };
        row.diff_lo = pct(0.025);
        row.diff_hi = pct(0.975);
    }
    return report;
}

void write_psychometric_csv(const PsychometricData& data, std::ostream& out) {
    out << "axis,level,trials,detections\n";
    for (std::size_t i = 0; i < data.levels.size(); ++i)
        out << to_string(data.axis) << ',' << format_g(data.levels[i]) << ','
            << data.trials_per_level << ',' << data.detect_counts[i] << '\n';
}

void write_thresholds_csv(
    const std::string& condition,
    const std::vector<std::pair<StimulusAxis, ProbeResult>>& rows,
    std::ostream& out) {
    out << "condition,axis,midpoint,slope,threshold,ci_low,ci_high\n";
    for (const auto& [axis, r] : rows)
        out << condition << ',' << to_string(axis) << ','
            << format_g(r.fit.midpoint) << ',' << format_g(r.fit.slope) << ','
            << format_g(r.thr.level_at_criterion) << ','
            << format_g(r.thr.ci_low) << ',' << format_g(r.thr.ci_high) << '\n';
}

void write_stages_csv(const std::vector<StageReport>& reports,
                      StimulusAxis axis, std::ostream& out) {
    out << "seed,probe,at_trial,episodes,compiled_fraction,stage,focus,axis,"
           "midpoint,slope,threshold,ci_low,ci_high\n";
    auto emit = [&](std::uint64_t seed, const StageProbeRow& row) {
        out << seed << ',' << row.probe_index << ',' << row.at_trial << ','
            << row.episodes_seen << ',' << format_g(row.compiled_frac) << ','
            << to_string(row.stage) << ',' << to_string(row.focus) << ','
            << to_string(axis) << ',' << format_g(row.probe.fit.midpoint) << ','
            << format_g(row.probe.fit.slope) << ','
            << format_g(row.probe.thr.level_at_criterion) << ','
            << format_g(row.probe.thr.ci_low) << ','
            << format_g(row.probe.thr.ci_high) << '\n';
    };
    for (const auto& report : reports) {
        for (const auto& row : report.rows) emit(report.seed, row);
        if (report.expert_open_probe) emit(report.seed, *report.expert_open_probe);
    }
}

void write_ablation_csv(const std::vector<AblationReport>& reports,
                        StimulusAxis axis, std::ostream& out) {
    out << "seed,condition,axis,midpoint,slope,threshold,ci_low,ci_high,"
           "diff_from_baseline,diff_ci_low,diff_ci_high\n";
    for (const auto& report : reports)
        for (const auto& row : report.rows) {
            out << report.seed << ',' << row.condition << ',' << to_string(axis)
                << ',' << format_g(row.probe.fit.midpoint) << ','
                << format_g(row.probe.fit.slope) << ','
                << format_g(row.probe.thr.level_at_criterion) << ','
                << format_g(row.probe.thr.ci_low) << ','
                << format_g(row.probe.thr.ci_high);
            if (row.diff)
                out << ',' << format_g(*row.diff) << ',' << format_g(*row.diff_lo)
                    << ',' << format_g(*row.diff_hi) << '\n';
            else
                out << ",-,-,-\n";
        }
}

void write_ablation_stimuli_csv(const Config& cfg,
                                const std::vector<std::uint64_t>& seeds,
                                std::ostream& out) {
    out << "event_id,onset_ms,duration_ms,amplitude\n";
    char buf[160];
    for (std::uint64_t seed : seeds) {
        const std::uint64_t base = probe_base_seed(seed);
        for (double level : cfg.probe.levels) {
            for (int trial = 0; trial < cfg.probe.trials_per_level; ++trial) {
                SignalEvent ev = make_probe_event(
                    cfg.probe.axis, level, cfg.probe.sig,
                    probe_stimulus_seed(base, cfg.probe.axis, level, trial));
                std::snprintf(buf, sizeof buf, "s%llu-L%s-t%d,%.3f,%.3f,%.6g",
                              (unsigned long long)seed, format_g(level).c_str(),
                              trial, ev.onset_ms, ev.duration_ms, ev.amplitude);
                out << buf << '\n';
            }
        }
    }
}

void write_manifest(const std::string& subcommand, const std::string& config_hash,
                    const std::vector<std::uint64_t>& seeds, std::ostream& out) {
    out << "tool = metasim 0.1.0\n";
    out << "subcommand = " << subcommand << "\n";
    out << "config_hash = " << config_hash << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i)
        out << (i ? "," : "") << seeds[i];
    out << "\n";
}

}  // namespace metasim
