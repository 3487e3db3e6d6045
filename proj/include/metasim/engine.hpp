#pragma once
// The cognition cycle: match productions against buffers, resolve conflicts
// by utility, fire with mechanism-dependent timing, advance the simulated
// clock, and log every event.
//
// Single-threaded, deterministic simulation core. Whole EngineState values
// copy cleanly, so a harness may run many independent instances in parallel,
// each with its own seed.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metasim/event_log.hpp"
#include "metasim/learning.hpp"
#include "metasim/mechanisms.hpp"
#include "metasim/memory.hpp"
#include "metasim/production.hpp"
#include "metasim/rng.hpp"
#include "metasim/signals.hpp"

namespace metasim {

struct EngineState {
    double clock_ms = 0.0;
    std::map<std::string, Buffer> buffers;  // goal, retrieval, interoceptive, ...
    std::vector<Production> rules;          // sorted by id
    DeclarativeMemory memory;
    SignalTrace stimulus;
    GateModel gate;
    EventLog log;
    Rng rng{0};
    UtilityParams learning;
    CompilationTracker compiler;

    // Set when a retrieval outcome was delivered and no production has fired
    // since; the next firing that consumes it may compile the pair.
    struct PendingDelivery {
        std::string requester;
        Chunk chunk;
    };
    std::optional<PendingDelivery> pending_delivery;

    EngineState();

    Buffer& buffer(const std::string& name);
    const Buffer* find_buffer(const std::string& name) const;
    Production* find_rule(std::string_view id);
    const Production* find_rule(std::string_view id) const;

    // Keeps rules sorted; duplicate ids and ill-formed productions are
    // errors.
    void add_rule(Production p);
};

// All instantiations whose every pattern is satisfied by the current buffer
// contents, ordered by production id.
std::vector<Instantiation> match_conflict_set(const EngineState& state);

// Argmax of utility + logistic noise; with noise_scale 0, strict argmax with
// ties broken toward the lexicographically smaller id. Empty conflict yields
// nothing.
std::optional<Instantiation> select_production(
    const std::vector<Instantiation>& conflict, Rng& rng, double noise_scale);

// Fixed cycle time unless complexity timing is on, in which case Simple
// productions take uniform [34, 44] ms and Complex [59, 73] ms; the result
// is scaled by clock_scale.
double firing_duration(const Production& p, const MechanismConfig& cfg,
                       Rng& rng);

// One cycle: refresh the interoceptive buffer, deliver any due retrieval,
// match, select, fire (or tick idle). Waiting on a pending retrieval happens
// in cycle-sized ticks that keep sampling, so a production that becomes
// ready mid-wait fires instead of the waited-on one.
void step(EngineState& state, const MechanismConfig& cfg);

// Repeated step until clock >= t_end. Bit-identical traces for identical
// (state, cfg, seed).
void run_until(EngineState& state, const MechanismConfig& cfg, double t_end_ms);

}  // namespace metasim
