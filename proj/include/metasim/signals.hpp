#pragma once
// Fleeting internal signal events and detection scoring: the substrate from
// which the detection threshold emerges.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metasim/chunk.hpp"
#include "metasim/event_log.hpp"
#include "metasim/rng.hpp"

namespace metasim {

inline constexpr const char* kAffectSampleType = "affect-sample";

// A transient internal stimulus to be detected.
struct SignalEvent {
    std::string id;
    double onset_ms = 0.0;
    double duration_ms = 0.0;
    double amplitude = 0.0;

    double end_ms() const { return onset_ms + duration_ms; }
    bool active_at(double t_ms) const {
        return onset_ms <= t_ms && t_ms < end_ms();
    }
};

// Events sorted by onset, pairwise disjoint, all ending before the horizon.
struct SignalTrace {
    std::vector<SignalEvent> events;
    double horizon_ms = 0.0;

    const SignalEvent* active_at(double t_ms) const;
};

// Gaussian amplitude gate: a sample passes when amplitude + N(0, sd) exceeds
// the gate mean.
struct GateModel {
    double gate_mean = 0.5;
    double gate_sd = 0.25;
};

// Poisson-process onsets at the given rate, uniform durations, fixed
// amplitude. Candidates overlapping an earlier event or outliving the
// horizon are dropped. Deterministic per rng state.
SignalTrace generate_trace(double rate_per_s, double duration_min_ms,
                           double duration_max_ms, double amplitude,
                           double horizon_ms, Rng& rng);

// If an event is active at t and its amplitude passes the gate, returns an
// affect-sample chunk carrying the event id. The gate noise draw happens
// only when an event is active.
std::optional<Chunk> sample_interoceptive(const SignalTrace& trace, double t_ms,
                                          const GateModel& gate, Rng& rng);

struct DetectionRecord {
    std::string event_id;
    bool detected = false;
    std::optional<double> detect_time_ms;
    std::optional<std::string> detecting_production;
};

// An event is detected iff some detection mark carrying its id was logged
// inside [onset, onset + duration]; the first qualifying mark wins.
std::vector<DetectionRecord> score_detections(const SignalTrace& trace,
                                              const EventLog& log);

// CSV: event_id,onset_ms,duration_ms,amplitude
void write_trace_csv(const SignalTrace& trace, std::ostream& out);
SignalTrace read_trace_csv(std::istream& in, double horizon_ms);

}  // namespace metasim
