#pragma once
// Condition-action rules: the pattern language productions match against
// buffer contents and the action vocabulary they fire with.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metasim/chunk.hpp"

namespace metasim {

// Ordered so that binding order (and with it, everything downstream) is
// deterministic.
using Bindings = std::map<std::string, SlotValue>;

// One test against a slot of a matched chunk.
//   Eq     — slot present and equal to `value`
//   Bind   — slot present; binds `var` on first use, equality test after
//   Absent — slot not present
struct SlotTest {
    enum class Kind { Eq, Bind, Absent };
    Kind kind = Kind::Eq;
    std::string slot;
    SlotValue value{};
    std::string var;

    static SlotTest eq(std::string slot, SlotValue v);
    static SlotTest bind(std::string slot, std::string var);
    static SlotTest absent(std::string slot);

    bool operator==(const SlotTest&) const = default;
};

// Condition on one buffer: either "holds a chunk of this type passing all
// tests" or, with require_empty, "holds nothing and has no pending request".
struct BufferPattern {
    std::string buffer;
    bool require_empty = false;
    std::string chunk_type;  // empty = any type
    std::vector<SlotTest> tests;

    bool operator==(const BufferPattern&) const = default;
};

// Single-assignment unification of one pattern against one chunk. Bindings
// accumulate into `b`; on failure `b` is left untouched.
bool match_pattern(const BufferPattern& pat, const Chunk& c, Bindings& b);

// Constant-only pattern over declarative chunks (a retrieval request after
// variable resolution).
struct ChunkQuery {
    std::string type_name;  // empty = any
    std::vector<SlotTest> tests;  // Eq / Absent only

    bool operator==(const ChunkQuery&) const = default;
};

bool query_matches(const ChunkQuery& q, const Chunk& c);
std::string to_string(const ChunkQuery& q);

// Constant or variable reference appearing in an action.
struct ValueRef {
    bool is_var = false;
    SlotValue value{};
    std::string var;

    static ValueRef of(SlotValue v);
    static ValueRef variable(std::string var);
    SlotValue resolve(const Bindings& b) const;  // throws on unbound variable

    bool operator==(const ValueRef&) const = default;
};

// modify slot | clear buffer | issue retrieval request | emit detection mark
struct BufferAction {
    enum class Kind { ModifySlot, ClearBuffer, Request, MarkDetection };
    Kind kind = Kind::ModifySlot;
    std::string buffer;  // ModifySlot / ClearBuffer target
    std::string slot;    // ModifySlot
    ValueRef value{};    // ModifySlot payload; MarkDetection event id
    std::string request_type;  // Request
    std::vector<std::pair<std::string, ValueRef>> request_slots;

    static BufferAction modify(std::string buffer, std::string slot, ValueRef v);
    static BufferAction clear(std::string buffer);
    static BufferAction request(std::string type,
                                std::vector<std::pair<std::string, ValueRef>> slots = {});
    static BufferAction mark_detection(ValueRef event_id);

    bool operator==(const BufferAction&) const = default;
};

enum class Complexity { Simple, Complex };
enum class Provenance { Authored, Compiled };

const char* to_string(Complexity c);
const char* to_string(Provenance p);

struct Production {
    std::string id;
    std::vector<BufferPattern> conditions;
    std::vector<BufferAction> actions;
    double utility = 0.0;
    Complexity complexity = Complexity::Complex;
    Provenance provenance = Provenance::Authored;
    // Marks the monitoring class: firing constitutes noticing an internal
    // state, and Narrow focus admits only this class.
    bool is_monitor = false;
};

// A matched production, plus the bookkeeping the engine needs downstream.
struct Instantiation {
    std::string production_id;
    Bindings bindings;
    double utility = 0.0;
    bool is_monitor = false;
    // Event id carried by a matched affect-sample chunk, if any.
    std::optional<std::string> matched_sample_event;
    // True when some condition matched the retrieval buffer's content.
    bool consumed_retrieval = false;
};

// Well-formedness: every variable used in an action is bound by a condition,
// utility is finite, id is non-empty. Returns the complete violation list.
std::vector<std::string> validate_production(const Production& p);

// Canonical structural serialization (id and utility excluded); identical
// keys identify identical recompiled children.
std::string structure_key(const Production& p);

}  // namespace metasim
