#include "metasim/learning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "metasim/rng.hpp"

namespace metasim {

Production update_utility(Production p, const UtilityParams& params,
                          double elapsed_ms) {
    if (!(params.alpha > 0.0) || params.alpha > 1.0)
        throw std::invalid_argument("alpha must be in (0, 1]");
    if (!std::isfinite(params.reward_magnitude))
        throw std::invalid_argument("reward must be finite");
    if (!(params.time_cost_per_ms >= 0.0))
        throw std::invalid_argument("time cost must be >= 0");
    if (!(elapsed_ms >= 0.0) || !std::isfinite(elapsed_ms))
        throw std::invalid_argument("elapsed time must be finite and >= 0");
    if (!std::isfinite(p.utility))
        throw std::invalid_argument("utility must be finite");

    const double r_eff =
        params.reward_magnitude - params.time_cost_per_ms * elapsed_ms;
    p.utility += params.alpha * (r_eff - p.utility);
    return p;
}

namespace {

// Slot values p1 writes, keyed by (buffer, slot). Only constant writes are
// tracked; a variable write satisfies no downstream test statically.
using WriteMap = std::map<std::pair<std::string, std::string>, ValueRef>;

WriteMap collect_writes(const Production& p) {
    WriteMap writes;
    for (const auto& a : p.actions)
        if (a.kind == BufferAction::Kind::ModifySlot)
            writes[{a.buffer, a.slot}] = a.value;
    return writes;
}

ValueRef substitute(ValueRef v, const Bindings& sub) {
    if (!v.is_var) return v;
    auto it = sub.find(v.var);
    if (it != sub.end()) return ValueRef::of(it->second);
    return v;
}

}  // namespace

Production compile_pair(const Production& p1, const Production& p2,
                        const Chunk& retrieved, bool compiled_simple) {
    const BufferAction* request = nullptr;
    for (const auto& a : p1.actions)
        if (a.kind == BufferAction::Kind::Request) request = &a;
    if (!request)
        throw std::invalid_argument("compile_pair: '" + p1.id +
                                    "' issues no retrieval request");

    // Bind p2's retrieval-buffer variables from the delivered chunk.
    Bindings sub;
    bool consumes = false;
    for (const auto& c : p2.conditions) {
        if (c.buffer != "retrieval" || c.require_empty) continue;
        consumes = true;
        if (!match_pattern(c, retrieved, sub))
            throw std::invalid_argument(
                "compile_pair: retrieved chunk does not satisfy '" + p2.id +
                "' retrieval pattern");
    }
    if (!consumes)
        throw std::invalid_argument("compile_pair: '" + p2.id +
                                    "' does not consume the retrieval buffer");

    const WriteMap p1_writes = collect_writes(p1);

    Production child;
    child.provenance = Provenance::Compiled;
    child.complexity = compiled_simple ? Complexity::Simple : Complexity::Complex;
    child.is_monitor = p1.is_monitor || p2.is_monitor;
    child.utility = 0.0;

    // p1's conditions minus the retrieval buffer (the request's enabling
    // conditions go away with the request itself).
    for (const auto& c : p1.conditions)
        if (c.buffer != "retrieval") child.conditions.push_back(c);

    // p2's non-retrieval conditions, transformed by p1's writes: a test on a
    // slot p1 set is resolved now instead of at match time.
    for (const auto& c : p2.conditions) {
        if (c.buffer == "retrieval") continue;
        BufferPattern merged = c;
        merged.tests.clear();
        for (const auto& t : c.tests) {
            auto w = p1_writes.find({c.buffer, t.slot});
            if (w != p1_writes.end()) {
                const ValueRef written = substitute(w->second, sub);
                if (written.is_var)
                    throw std::invalid_argument(
                        "compile_pair: cannot statically resolve '" + t.slot +
                        "' written by '" + p1.id + "'");
                if (t.kind == SlotTest::Kind::Eq) {
                    if (!(written.value == t.value))
                        throw std::invalid_argument(
                            "compile_pair: '" + p2.id + "' tests " + t.slot +
                            " against a value '" + p1.id + "' never writes");
                    continue;  // guaranteed by p1's action
                }
                if (t.kind == SlotTest::Kind::Bind) {
                    auto bound = sub.find(t.var);
                    if (bound == sub.end())
                        sub.emplace(t.var, written.value);
                    else if (!(bound->second == written.value))
                        throw std::invalid_argument(
                            "compile_pair: variable '" + t.var +
                            "' binds inconsistently across the pair");
                    continue;
                }
                throw std::invalid_argument("compile_pair: '" + p2.id +
                                            "' requires " + t.slot +
                                            " absent but '" + p1.id +
                                            "' writes it");
            }
            // Variables already bound from the retrieved chunk become
            // constant tests in the child.
            if (t.kind == SlotTest::Kind::Bind && sub.count(t.var)) {
                merged.tests.push_back(SlotTest::eq(t.slot, sub.at(t.var)));
                continue;
            }
            merged.tests.push_back(t);
        }

        BufferPattern* existing = nullptr;
        for (auto& cc : child.conditions)
            if (cc.buffer == merged.buffer && !cc.require_empty)
                existing = &cc;
        if (!existing || merged.require_empty) {
            child.conditions.push_back(merged);
            continue;
        }
        if (existing->chunk_type.empty()) existing->chunk_type = merged.chunk_type;
        else if (!merged.chunk_type.empty() &&
                 merged.chunk_type != existing->chunk_type)
            throw std::invalid_argument(
                "compile_pair: incompatible chunk types on buffer '" +
                merged.buffer + "'");
        for (const auto& t : merged.tests) {
            if (std::find(existing->tests.begin(), existing->tests.end(), t) ==
                existing->tests.end())
                existing->tests.push_back(t);
        }
    }

    // Actions: p1's minus the request, then p2's with the substitution
    // applied. Later writes to the same slot win; clears of the retrieval
    // buffer vanish with the buffer's role.
    std::vector<BufferAction> merged_actions;
    for (const auto& a : p1.actions) {
        if (a.kind == BufferAction::Kind::Request) continue;
        merged_actions.push_back(a);
    }
    for (const auto& a : p2.actions) {
        if (a.kind == BufferAction::Kind::ClearBuffer && a.buffer == "retrieval")
            continue;
        BufferAction b = a;
        if (b.kind == BufferAction::Kind::ModifySlot ||
            b.kind == BufferAction::Kind::MarkDetection)
            b.value = substitute(b.value, sub);
        if (b.kind == BufferAction::Kind::Request)
            for (auto& [slot, v] : b.request_slots) v = substitute(v, sub);
        if (b.kind == BufferAction::Kind::ModifySlot) {
            std::erase_if(merged_actions, [&](const BufferAction& prev) {
                return prev.kind == BufferAction::Kind::ModifySlot &&
                       prev.buffer == b.buffer && prev.slot == b.slot;
            });
        }
        merged_actions.push_back(std::move(b));
    }
    child.actions = std::move(merged_actions);

    child.id = p1.id + "+" + p2.id;
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "~%06llx",
                  (unsigned long long)(fnv1a(structure_key(child)) & 0xffffff));
    child.id += suffix;

    auto errors = validate_production(child);
    if (!errors.empty())
        throw std::logic_error("compile_pair produced ill-formed child: " +
                               errors.front());
    return child;
}

CompilationRecord* CompilationTracker::find_by_structure(const std::string& key) {
    for (std::size_t i = 0; i < structure_keys.size(); ++i)
        if (structure_keys[i] == key) return &records[i];
    return nullptr;
}

CompilationOutcome record_compilation(CompilationTracker& tracker,
                                      std::vector<Production>& rules,
                                      const Production& p1, const Production& p2,
                                      const Chunk& retrieved, double now_ms,
                                      const UtilityParams& params,
                                      bool compiled_simple) {
    Production child = compile_pair(p1, p2, retrieved, compiled_simple);
    const std::string key = structure_key(child);

    if (CompilationRecord* existing = tracker.find_by_structure(key)) {
        existing->recreation_count += 1;
        const double parents_mean = 0.5 * (p1.utility + p2.utility);
        for (auto& r : rules) {
            if (r.id != existing->child) continue;
            UtilityParams toward = params;
            toward.reward_magnitude = parents_mean;
            toward.time_cost_per_ms = 0.0;
            r = update_utility(std::move(r), toward, 0.0);
            return {existing->child, false, r.utility};
        }
        throw std::logic_error("compilation record without matching rule");
    }

    CompilationRecord rec;
    rec.parent_first = p1.id;
    rec.parent_second = p2.id;
    rec.bound_chunk = retrieved;
    rec.child = child.id;
    rec.created_at_ms = now_ms;
    tracker.records.push_back(std::move(rec));
    tracker.structure_keys.push_back(key);

    auto pos = std::lower_bound(
        rules.begin(), rules.end(), child,
        [](const Production& a, const Production& b) { return a.id < b.id; });
    std::string id = child.id;
    rules.insert(pos, std::move(child));
    return {id, true, 0.0};
}

const char* to_string(StageLabel s) {
    switch (s) {
        case StageLabel::Novice: return "novice";
        case StageLabel::Intermediate: return "intermediate";
        case StageLabel::Expert: return "expert";
    }
    return "?";
}

double compiled_fraction(std::span<const EpisodeRecord> window) {
    if (window.empty()) return 0.0;
    std::size_t compiled = 0;
    for (const auto& e : window) compiled += e.compiled ? 1 : 0;
    return double(compiled) / double(window.size());
}

StageLabel classify_stage(std::span<const EpisodeRecord> window) {
    if (window.empty())
        throw std::invalid_argument("classify_stage: empty episode window");
    const double f = compiled_fraction(window);
    if (f < 0.1) return StageLabel::Novice;
    if (f < 0.9) return StageLabel::Intermediate;
    return StageLabel::Expert;
}

}  // namespace metasim
