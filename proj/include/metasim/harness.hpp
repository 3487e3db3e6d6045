#pragma once
// Experiment front door: wires the standard monitoring task, runs the
// three-stage training experiment and the mechanism ablation, and writes
// CSV reports.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metasim/config.hpp"
#include "metasim/engine.hpp"
#include "metasim/psychophysics.hpp"

namespace metasim {

// Rule and chunk names of the standard monitoring task.
inline constexpr const char* kRetrieveRule = "retrieve-instruction";
inline constexpr const char* kApplyRule = "apply-instruction";
inline constexpr const char* kInstructionChunk = "instr-equanimity";

// Novice task: one meta-instruction chunk in declarative memory and two
// rules, one retrieving the instruction when an internal sample appears and
// one executing it against the sample. Distractor variants add non-monitor
// rules that match the busy goal state. monitors_simple authors the two task
// rules as Simple instead of Complex (mechanism 4 arms).
EngineState build_monitoring_task(const Config& cfg, bool monitors_simple = false);

struct ProbeResult {
    PsychometricData data;
    LogisticFit fit;
    ThresholdEstimate thr;
};

ProbeResult run_probe(const ProbeContext& ctx, const ProbeProtocol& protocol,
                      std::uint64_t base_seed, std::uint64_t boot_seed);

// One training trial against a generated stimulus trace: run, score, reward
// the productions on the causal path of each true detection, record
// episodes. Rewards go to the detecting production and, when the detection
// consumed a retrieved chunk, to the production that requested it; each is
// discounted by the delay from its own firing.
struct TrialSummary {
    int detections = 0;
    int events = 0;
};
TrialSummary run_training_trial(EngineState& agent, const Config& cfg,
                                int trial_index, std::uint64_t trial_seed,
                                std::vector<EpisodeRecord>& episodes);

struct StageProbeRow {
    int probe_index = 0;
    int at_trial = 0;
    int episodes_seen = 0;
    double compiled_frac = 0.0;
    StageLabel stage = StageLabel::Novice;
    FocusMode focus = FocusMode::Narrow;
    ProbeResult probe;
};

struct StageReport {
    std::uint64_t seed = 0;
    std::vector<StageProbeRow> rows;
    // The trained policy re-probed with the focus filter dropped: monitoring
    // should survive without the narrow-focus mechanism once compiled rules
    // carry it. Present when the training config runs Narrow.
    std::optional<StageProbeRow> expert_open_probe;
    // Full training trace (per-trial engine logs back to back, with utility
    // updates appended), replayable for audit.
    EventLog training_log;
};

// Interleaves training trials with frozen-policy threshold probes (before
// trial 1, every probe_every trials, and after the final trial).
StageReport run_stages_experiment(const Config& cfg, std::uint64_t seed);

// A mechanism-ablation arm: a config variant plus the task tweak mechanism 4
// needs (monitor rules authored Simple).
struct AblationArm {
    std::string name;
    MechanismConfig mech;
    bool monitors_simple = false;
};

// baseline, clock-scale (1), compilation (2), narrow-focus (3),
// complexity-timing (4) — each differing from the baseline in exactly one
// mechanism.
std::vector<AblationArm> standard_ablation_arms(const Config& cfg);

struct AblationRow {
    std::string condition;
    ProbeResult probe;
    // difference from baseline threshold with a paired-bootstrap 95% CI;
    // unset on the baseline row
    std::optional<double> diff, diff_lo, diff_hi;
};

struct AblationReport {
    std::uint64_t seed = 0;
    std::vector<AblationRow> rows;
};

// Probes every arm against the byte-identical stimulus set derived from the
// seed. Arms that rely on compilation are first brought to their practiced
// state by a fixed rewarded-training phase under Narrow focus; probes are
// frozen-policy for every arm.
AblationReport run_ablation(const Config& cfg,
                            const std::vector<AblationArm>& arms,
                            std::uint64_t seed);

// CSV writers (schemas documented in docs/config.md).
void write_psychometric_csv(const PsychometricData& data, std::ostream& out);
void write_thresholds_csv(const std::string& condition,
                          const std::vector<std::pair<StimulusAxis, ProbeResult>>& rows,
                          std::ostream& out);
void write_stages_csv(const std::vector<StageReport>& reports,
                      StimulusAxis axis, std::ostream& out);
void write_ablation_csv(const std::vector<AblationReport>& reports,
                        StimulusAxis axis, std::ostream& out);

// The probe stimulus set an ablation replays across arms, in signal-trace
// CSV form (ids encode seed, level and trial).
void write_ablation_stimuli_csv(const Config& cfg,
                                const std::vector<std::uint64_t>& seeds,
                                std::ostream& out);

void write_manifest(const std::string& subcommand, const std::string& config_hash,
                    const std::vector<std::uint64_t>& seeds, std::ostream& out);

}  // namespace metasim
