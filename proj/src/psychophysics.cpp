#include "metasim/psychophysics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace metasim {

const char* to_string(StimulusAxis a) {
    return a == StimulusAxis::Duration ? "duration" : "amplitude";
}

double LogisticFit::probability(double level) const {
    const double core = 1.0 / (1.0 + std::exp(-slope * (level - midpoint)));
    return guess + (1.0 - guess - lapse) * core;
}

std::uint64_t probe_stimulus_seed(std::uint64_t base_seed, StimulusAxis axis,
                                  double level, int trial) {
    return seed_combine(base_seed, std::uint64_t(axis) + 1, bits_of(level),
                        std::uint64_t(trial));
}

SignalEvent make_probe_event(StimulusAxis axis, double level,
                             const ProbeSignalParams& sig,
                             std::uint64_t stimulus_seed) {
    SignalEvent ev;
    ev.id = "probe";
    ev.duration_ms =
        axis == StimulusAxis::Duration ? level : sig.duration_default_ms;
    ev.amplitude =
        axis == StimulusAxis::Amplitude ? level : sig.amplitude_default;
    const double lo = sig.onset_pad_ms;
    const double hi = sig.horizon_ms - ev.duration_ms - sig.onset_pad_ms;
    if (!(hi > lo))
        throw std::invalid_argument(
            "probe horizon too short for stimulus duration " +
            std::to_string(ev.duration_ms));
    Rng rng(stimulus_seed);
    ev.onset_ms = rng.uniform(lo, hi);
    return ev;
}

PsychometricData run_constant_stimuli(const ProbeContext& ctx, StimulusAxis axis,
                                      const std::vector<double>& levels,
                                      int trials_per_level,
                                      std::uint64_t base_seed) {
    if (levels.size() < 2)
        throw std::invalid_argument("need at least 2 stimulus levels");
    if (!std::is_sorted(levels.begin(), levels.end()) ||
        std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw std::invalid_argument("levels must be strictly increasing");
    if (trials_per_level < 1)
        throw std::invalid_argument("need at least 1 trial per level");

    // Frozen policy: the probe measures a snapshot, so the rule set must not
    // change mid-probe.
    MechanismConfig cfg = ctx.cfg;
    cfg.compilation_enabled = false;

    PsychometricData data;
    data.axis = axis;
    data.levels = levels;
    data.trials_per_level = trials_per_level;
    data.detect_counts.assign(levels.size(), 0);

    for (std::size_t li = 0; li < levels.size(); ++li) {
        for (int trial = 0; trial < trials_per_level; ++trial) {
            const std::uint64_t stim_seed =
                probe_stimulus_seed(base_seed, axis, levels[li], trial);
            try {
                SignalEvent ev =
                    make_probe_event(axis, levels[li], ctx.sig, stim_seed);
                EngineState engine = ctx.prototype;
                engine.clock_ms = 0.0;
                engine.log = EventLog{};
                engine.stimulus = SignalTrace{{ev}, ctx.sig.horizon_ms};
                engine.rng = Rng(seed_combine(stim_seed, 0x454e47ULL));  // engine stream
                run_until(engine, cfg, ctx.sig.horizon_ms);
                auto records = score_detections(engine.stimulus, engine.log);
                if (records.front().detected) data.detect_counts[li] += 1;
            } catch (const std::exception& e) {
                throw std::runtime_error(
                    "probe trial failed (axis=" + std::string(to_string(axis)) +
                    " level=" + std::to_string(levels[li]) +
                    " trial=" + std::to_string(trial) + "): " + e.what());
            }
        }
    }
    return data;
}

double negative_log_likelihood(const PsychometricData& data, double midpoint,
                               double slope, double guess, double lapse) {
    constexpr double eps = 1e-9;
    LogisticFit f{midpoint, slope, guess, lapse, 0.0};
    double nll = 0.0;
    for (std::size_t i = 0; i < data.levels.size(); ++i) {
        const double p =
            std::clamp(f.probability(data.levels[i]), eps, 1.0 - eps);
        const int k = data.detect_counts[i];
        const int n = data.trials_per_level;
        nll -= k * std::log(p) + (n - k) * std::log(1.0 - p);
    }
    return nll;
}

namespace {

struct Bounds {
    double lo, hi;
};

// Golden-section minimization of a unimodal-enough 1-D slice.
template <typename F>
double golden_min(F f, double lo, double hi, double rel_tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    const double scale = std::max(std::abs(lo), std::abs(hi)) + 1e-12;
    while ((b - a) > rel_tol * scale) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

std::pair<double, double> fit_slope_bounds(const std::vector<double>& levels) {
    double min_gap = levels.back() - levels.front();
    for (std::size_t i = 1; i < levels.size(); ++i)
        min_gap = std::min(min_gap, levels[i] - levels[i - 1]);
    return {1e-4, 10.0 / min_gap};
}

LogisticFit fit_logistic(const PsychometricData& data, FitOptions opt) {
    if (data.levels.size() < 2 ||
        data.detect_counts.size() != data.levels.size())
        throw std::invalid_argument("psychometric data malformed");

    bool any_hit = false, any_miss = false;
    for (int k : data.detect_counts) {
        if (k > 0) any_hit = true;
        if (k < data.trials_per_level) any_miss = true;
    }
    if (!any_hit) throw DegenerateFitError(false);
    if (!any_miss) throw DegenerateFitError(true);

    const double lo = data.levels.front();
    const double hi = data.levels.back();
    const double range = hi - lo;
    const Bounds mid_bounds{lo, hi};
    const auto [slope_lo, slope_hi] = fit_slope_bounds(data.levels);
    const Bounds slope_bounds{slope_lo, slope_hi};

    LogisticFit best;
    double best_nll = std::numeric_limits<double>::infinity();
    for (int i = 0; i < opt.grid_midpoints; ++i) {
        const double m = lo + range * double(i) / double(opt.grid_midpoints - 1);
        for (int j = 0; j < opt.grid_slopes; ++j) {
            const double t = double(j) / double(opt.grid_slopes - 1);
            const double s = slope_bounds.lo *
                             std::pow(slope_bounds.hi / slope_bounds.lo, t);
            const double nll = negative_log_likelihood(data, m, s, 0.0, 0.0);
            if (nll < best_nll) {
                best_nll = nll;
                best.midpoint = m;
                best.slope = s;
            }
        }
    }

    // Coordinate descent from the best grid point; never accepts a worse
    // likelihood, so the grid optimum is a floor.
    double m = best.midpoint, s = best.slope, g = 0.0, l = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
        const double m_prev = m, s_prev = s;
        m = golden_min(
            [&](double x) { return negative_log_likelihood(data, x, s, g, l); },
            mid_bounds.lo, mid_bounds.hi, opt.rel_tol);
        s = golden_min(
            [&](double x) { return negative_log_likelihood(data, m, x, g, l); },
            slope_bounds.lo, slope_bounds.hi, opt.rel_tol);
        if (opt.estimate_guess_lapse) {
            g = golden_min(
                [&](double x) { return negative_log_likelihood(data, m, s, x, l); },
                0.0, 0.1, opt.rel_tol);
            l = golden_min(
                [&](double x) { return negative_log_likelihood(data, m, s, g, x); },
                0.0, 0.1, opt.rel_tol);
        }
        const double dm = std::abs(m - m_prev) / (std::abs(m_prev) + 1e-12);
        const double ds = std::abs(s - s_prev) / (std::abs(s_prev) + 1e-12);
        if (dm < opt.rel_tol && ds < opt.rel_tol) break;
    }

    const double refined = negative_log_likelihood(data, m, s, g, l);
    if (refined <= best_nll) {
        best.midpoint = m;
        best.slope = s;
        best.guess = g;
        best.lapse = l;
        best_nll = refined;
    }
    best.log_likelihood = -best_nll;
    return best;
}

ThresholdEstimate threshold(const LogisticFit& fit, double criterion) {
    if (!(criterion > fit.guess) || !(criterion < 1.0 - fit.lapse))
        throw std::invalid_argument(
            "criterion must lie strictly between guess and 1 - lapse");
    const double q = (criterion - fit.guess) / (1.0 - fit.guess - fit.lapse);
    ThresholdEstimate est;
    est.criterion = criterion;
    est.level_at_criterion = fit.midpoint + std::log(q / (1.0 - q)) / fit.slope;
    est.ci_low = est.ci_high = est.level_at_criterion;
    return est;
}

ThresholdEstimate bootstrap_threshold(const PsychometricData& data,
                                      double criterion, int n_boot, Rng& rng,
                                      FitOptions opt) {
    if (n_boot < 100)
        throw std::invalid_argument("bootstrap needs n_boot >= 100");

    ThresholdEstimate point = threshold(fit_logistic(data, opt), criterion);

    std::vector<double> thresholds;
    thresholds.reserve(n_boot);
    int degenerate = 0;
    PsychometricData resampled = data;
    for (int b = 0; b < n_boot; ++b) {
        for (std::size_t i = 0; i < data.levels.size(); ++i) {
            const double p =
                double(data.detect_counts[i]) / double(data.trials_per_level);
            resampled.detect_counts[i] = rng.binomial(data.trials_per_level, p);
        }
        try {
            thresholds.push_back(
                threshold(fit_logistic(resampled, opt), criterion)
                    .level_at_criterion);
        } catch (const DegenerateFitError&) {
            ++degenerate;
        }
    }
    if (degenerate > n_boot / 5)
        throw std::runtime_error(
            "bootstrap unstable: " + std::to_string(degenerate) + " of " +
            std::to_string(n_boot) + " resamples were degenerate");

    std::sort(thresholds.begin(), thresholds.end());
    auto percentile = [&](double q) {
        const double idx = q * double(thresholds.size() - 1);
        const std::size_t i0 = std::size_t(idx);
        const std::size_t i1 = std::min(i0 + 1, thresholds.size() - 1);
        const double w = idx - double(i0);
        return (1.0 - w) * thresholds[i0] + w * thresholds[i1];
    };
    point.ci_low = std::min(percentile(0.025), point.level_at_criterion);
    point.ci_high = std::max(percentile(0.975), point.level_at_criterion);
    return point;
}

}  // namespace metasim
