#pragma once
// Central configuration for the four production speed-up mechanisms, each
// independently toggleable for ablation runs. Immutable after validation.

#include <string>
#include <vector>

#include "metasim/production.hpp"

namespace metasim {

enum class FocusMode { Open, Narrow };
enum class DetectAnchor { Start, End };

struct MechanismConfig {
    // Mechanism 1: ticking clock. clock_scale multiplies every firing
    // duration and the idle tick, so 0.5 halves the effective cycle.
    double cycle_time_ms = 50.0;
    double clock_scale = 1.0;

    // Mechanism 2: production compilation of retrieve/act pairs.
    bool compilation_enabled = false;

    // Mechanism 3: Narrow restricts the conflict set to monitor-class
    // productions (the designated focus class).
    FocusMode focus_mode = FocusMode::Open;

    // Mechanism 4: per-complexity firing times instead of the fixed cycle.
    // Simple productions take 34-44 ms, complex ones 59-73 ms.
    bool complexity_timing = false;

    // Conflict-resolution noise (logistic scale; 0 = strict argmax).
    double noise_scale = 0.5;

    // Declarative retrieval latency: fixed default, or F*exp(-A) when
    // activation_latency is on.
    bool activation_latency = false;
    double latency_factor_ms = 200.0;
    double default_latency_ms = 200.0;

    // Whether a detection mark is anchored to the firing's start or end.
    DetectAnchor detect_at = DetectAnchor::Start;

    double effective_cycle_ms() const { return cycle_time_ms * clock_scale; }
};

// Complete list of violated constraints, one message per field; empty means
// the config is valid.
std::vector<std::string> validate(const MechanismConfig& cfg);

// Mechanism 3 filter. Open passes the conflict set through; Narrow keeps
// only monitor-class instantiations (possibly none, in which case an idle
// tick follows).
std::vector<Instantiation> apply_focus(const MechanismConfig& cfg,
                                       std::vector<Instantiation> conflict);

const char* to_string(FocusMode m);
const char* to_string(DetectAnchor a);

}  // namespace metasim
