#pragma once
// Measures the emergent detection threshold: method-of-constant-stimuli
// experiments over a stimulus axis, a maximum-likelihood logistic fit, and
// threshold extraction with bootstrap confidence intervals.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "metasim/engine.hpp"

namespace metasim {

enum class StimulusAxis { Duration, Amplitude };
const char* to_string(StimulusAxis a);

// Probe stimulus parameters: the non-varied axis is held at its default,
// one event per trial, onset uniform inside the padded horizon.
struct ProbeSignalParams {
    double duration_default_ms = 150.0;
    double amplitude_default = 1.0;
    double onset_pad_ms = 50.0;
    double horizon_ms = 500.0;
};

struct PsychometricData {
    StimulusAxis axis = StimulusAxis::Duration;
    std::vector<double> levels;  // strictly increasing
    int trials_per_level = 0;
    std::vector<int> detect_counts;  // aligned with levels
};

// p(level) = guess + (1 - guess - lapse) / (1 + exp(-slope*(level - midpoint)))
struct LogisticFit {
    double midpoint = 0.0;
    double slope = 1.0;
    double guess = 0.0;
    double lapse = 0.0;
    double log_likelihood = 0.0;

    double probability(double level) const;
};

struct ThresholdEstimate {
    double level_at_criterion = 0.0;
    double criterion = 0.5;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct DegenerateFitError : std::runtime_error {
    explicit DegenerateFitError(bool saturated_high_)
        : std::runtime_error(saturated_high_
                                 ? "degenerate psychometric data: every trial detected"
                                 : "degenerate psychometric data: no trial detected"),
          saturated_high(saturated_high_) {}
    bool saturated_high;
};

// Everything needed to run frozen-policy probe trials: a prototype engine in
// its initial task state (cloned per trial) and the mechanism config, which
// the probe runs with compilation disabled so the policy cannot change.
struct ProbeContext {
    EngineState prototype;
    MechanismConfig cfg;
    ProbeSignalParams sig;
};

// The stimulus for (level, trial) is a pure function of (base_seed, axis,
// level, trial), so two configs probed with the same base seed consume
// byte-identical stimulus sets.
SignalEvent make_probe_event(StimulusAxis axis, double level,
                             const ProbeSignalParams& sig,
                             std::uint64_t stimulus_seed);

std::uint64_t probe_stimulus_seed(std::uint64_t base_seed, StimulusAxis axis,
                                  double level, int trial);

PsychometricData run_constant_stimuli(const ProbeContext& ctx, StimulusAxis axis,
                                      const std::vector<double>& levels,
                                      int trials_per_level,
                                      std::uint64_t base_seed);

struct FitOptions {
    bool estimate_guess_lapse = false;  // otherwise fixed at 0
    int grid_midpoints = 61;
    int grid_slopes = 41;
    double rel_tol = 1e-6;
};

double negative_log_likelihood(const PsychometricData& data, double midpoint,
                               double slope, double guess, double lapse);

// Search bounds used by fit_logistic: the slope ceiling is set by the
// smallest adjacent level gap (the sharpest transition the levels can
// resolve), the floor by 1e-4.
std::pair<double, double> fit_slope_bounds(const std::vector<double>& levels);

// Coarse grid search over (midpoint, slope) followed by bounded coordinate
// descent. Midpoint stays within the level range, slope within
// [1e-4, 10/range].
LogisticFit fit_logistic(const PsychometricData& data, FitOptions opt = {});

// Analytic inversion of the fitted curve at the criterion; the point
// estimate only (ci_low == ci_high == level).
ThresholdEstimate threshold(const LogisticFit& fit, double criterion);

// Percentile 95% CI from n_boot binomial resamples refit individually; point
// estimate from the original fit. More than 20% degenerate resamples is an
// instability error.
ThresholdEstimate bootstrap_threshold(const PsychometricData& data,
                                      double criterion, int n_boot, Rng& rng,
                                      FitOptions opt = {});

}  // namespace metasim
