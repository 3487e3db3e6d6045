#pragma once
// Utility learning that rewards faster productions, compilation of
// retrieve/act pairs into rules that bypass declarative memory, and
// classification of training progress into skill stages.

#include <span>
#include <string>
#include <vector>

#include "metasim/chunk.hpp"
#include "metasim/production.hpp"

namespace metasim {

struct UtilityParams {
    double alpha = 0.2;              // learning rate, in (0, 1]
    double reward_magnitude = 10.0;
    double time_cost_per_ms = 0.01;  // discount applied to delayed rewards
};

// U' = U + alpha * (R_eff - U) with R_eff = reward - time_cost * elapsed.
// elapsed_ms is the delay from the production's firing to reward delivery,
// so faster productions collect more of the reward.
Production update_utility(Production p, const UtilityParams& params,
                          double elapsed_ms);

struct CompilationRecord {
    std::string parent_first;
    std::string parent_second;
    Chunk bound_chunk;
    std::string child;
    double created_at_ms = 0.0;
    int recreation_count = 0;
};

// Merges a retrieval-issuing production and the production that consumed the
// delivered chunk into one rule with the retrieved content baked in as
// constants. The child carries none of the retrieval machinery: no request,
// no retrieval-buffer conditions. Preconditions: p1 issues a request, p2
// consumes the retrieval buffer, and `retrieved` satisfies p2's retrieval
// pattern.
Production compile_pair(const Production& p1, const Production& p2,
                        const Chunk& retrieved, bool compiled_simple = true);

// Deduplicates recompiled children by structure. Recreating an identical
// child bumps its recreation count and nudges its utility toward the
// parents' mean instead of adding a duplicate rule.
struct CompilationTracker {
    std::vector<CompilationRecord> records;

    CompilationRecord* find_by_structure(const std::string& key);
    std::vector<std::string> structure_keys;  // aligned with records
};

struct CompilationOutcome {
    std::string child_id;
    bool created = false;  // false = recreation of an existing child
    double child_utility = 0.0;
};

// Applies compile_pair against the rule set: inserts a new child or applies
// the recreation update. `rules` stays sorted by id.
CompilationOutcome record_compilation(CompilationTracker& tracker,
                                      std::vector<Production>& rules,
                                      const Production& p1, const Production& p2,
                                      const Chunk& retrieved, double now_ms,
                                      const UtilityParams& params,
                                      bool compiled_simple = true);

enum class StageLabel { Novice, Intermediate, Expert };
const char* to_string(StageLabel s);

// One monitoring episode: a scored detection and the production that
// served it.
struct EpisodeRecord {
    int trial = 0;
    double time_ms = 0.0;
    std::string production;
    bool compiled = false;
};

double compiled_fraction(std::span<const EpisodeRecord> window);

// Fraction f of episodes served by compiled productions:
// f < 0.1 Novice, f < 0.9 Intermediate, else Expert. Empty window is an
// error.
StageLabel classify_stage(std::span<const EpisodeRecord> window);

}  // namespace metasim
