#include "metasim/production.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace metasim {

SlotTest SlotTest::eq(std::string slot, SlotValue v) {
    return {Kind::Eq, std::move(slot), std::move(v), {}};
}

SlotTest SlotTest::bind(std::string slot, std::string var) {
    return {Kind::Bind, std::move(slot), {}, std::move(var)};
}

SlotTest SlotTest::absent(std::string slot) {
    return {Kind::Absent, std::move(slot), {}, {}};
}

bool match_pattern(const BufferPattern& pat, const Chunk& c, Bindings& b) {
    if (pat.require_empty) return false;  // caller handles emptiness
    if (!pat.chunk_type.empty() && pat.chunk_type != c.type_name) return false;

    Bindings scratch = b;
    for (const auto& t : pat.tests) {
        const SlotValue* v = c.slot(t.slot);
        switch (t.kind) {
            case SlotTest::Kind::Eq:
                if (!v || !(*v == t.value)) return false;
                break;
            case SlotTest::Kind::Bind: {
                if (!v) return false;
                auto it = scratch.find(t.var);
                if (it == scratch.end())
                    scratch.emplace(t.var, *v);
                else if (!(it->second == *v))
                    return false;
                break;
            }
            case SlotTest::Kind::Absent:
                if (v) return false;
                break;
        }
    }
    b = std::move(scratch);
    return true;
}

bool query_matches(const ChunkQuery& q, const Chunk& c) {
    if (!q.type_name.empty() && q.type_name != c.type_name) return false;
    for (const auto& t : q.tests) {
        const SlotValue* v = c.slot(t.slot);
        switch (t.kind) {
            case SlotTest::Kind::Eq:
                if (!v || !(*v == t.value)) return false;
                break;
            case SlotTest::Kind::Absent:
                if (v) return false;
                break;
            case SlotTest::Kind::Bind:
                throw std::invalid_argument(
                    "chunk query may not contain unresolved variables");
        }
    }
    return true;
}

std::string to_string(const ChunkQuery& q) {
    std::string out = q.type_name.empty() ? std::string("*") : q.type_name;
    for (const auto& t : q.tests) {
        if (t.kind == SlotTest::Kind::Eq)
            out += " " + t.slot + "=" + to_string(t.value);
        else if (t.kind == SlotTest::Kind::Absent)
            out += " -" + t.slot;
    }
    return out;
}

ValueRef ValueRef::of(SlotValue v) { return {false, std::move(v), {}}; }

ValueRef ValueRef::variable(std::string var) { return {true, {}, std::move(var)}; }

SlotValue ValueRef::resolve(const Bindings& b) const {
    if (!is_var) return value;
    auto it = b.find(var);
    if (it == b.end())
        throw std::logic_error("unbound variable '" + var + "' in action");
    return it->second;
}

BufferAction BufferAction::modify(std::string buffer, std::string slot, ValueRef v) {
    BufferAction a;
    a.kind = Kind::ModifySlot;
    a.buffer = std::move(buffer);
    a.slot = std::move(slot);
    a.value = std::move(v);
    return a;
}

BufferAction BufferAction::clear(std::string buffer) {
    BufferAction a;
    a.kind = Kind::ClearBuffer;
    a.buffer = std::move(buffer);
    return a;
}

BufferAction BufferAction::request(std::string type,
                                   std::vector<std::pair<std::string, ValueRef>> slots) {
    BufferAction a;
    a.kind = Kind::Request;
    a.buffer = "retrieval";
    a.request_type = std::move(type);
    a.request_slots = std::move(slots);
    return a;
}

BufferAction BufferAction::mark_detection(ValueRef event_id) {
    BufferAction a;
    a.kind = Kind::MarkDetection;
    a.value = std::move(event_id);
    return a;
}

const char* to_string(Complexity c) {
    return c == Complexity::Simple ? "simple" : "complex";
}

const char* to_string(Provenance p) {
    return p == Provenance::Authored ? "authored" : "compiled";
}

std::vector<std::string> validate_production(const Production& p) {
    std::vector<std::string> errors;
    if (p.id.empty()) errors.push_back("production id must be non-empty");
    if (!std::isfinite(p.utility))
        errors.push_back(p.id + ": utility must be finite");

    std::set<std::string> bound;
    for (const auto& c : p.conditions)
        for (const auto& t : c.tests)
            if (t.kind == SlotTest::Kind::Bind) bound.insert(t.var);

    auto check_ref = [&](const ValueRef& v, const char* where) {
        if (v.is_var && !bound.count(v.var))
            errors.push_back(p.id + ": variable '" + v.var + "' used in " +
                             where + " is not bound by any condition");
    };
    for (const auto& a : p.actions) {
        switch (a.kind) {
            case BufferAction::Kind::ModifySlot:
                check_ref(a.value, "modify");
                break;
            case BufferAction::Kind::MarkDetection:
                check_ref(a.value, "detection mark");
                break;
            case BufferAction::Kind::Request:
                for (const auto& [slot, v] : a.request_slots)
                    check_ref(v, "retrieval request");
                break;
            case BufferAction::Kind::ClearBuffer:
                break;
        }
    }
    return errors;
}

namespace {

void append_value(std::string& out, const SlotValue& v) {
    if (std::holds_alternative<std::string>(v))
        out += "s:" + std::get<std::string>(v);
    else if (std::holds_alternative<double>(v))
        out += "n:" + to_string(v);
    else
        out += "r:" + std::get<ChunkRef>(v).id;
}

void append_ref(std::string& out, const ValueRef& v) {
    if (v.is_var) {
        out += "?" + v.var;
    } else {
        append_value(out, v.value);
    }
}

}  // namespace

std::string structure_key(const Production& p) {
    std::string key;
    for (const auto& c : p.conditions) {
        key += "C[" + c.buffer;
        if (c.require_empty) key += "!";
        key += ":" + c.chunk_type;
        for (const auto& t : c.tests) {
            key += "|" + t.slot;
            switch (t.kind) {
                case SlotTest::Kind::Eq:
                    key += "=";
                    append_value(key, t.value);
                    break;
                case SlotTest::Kind::Bind:
                    key += "~?" + t.var;
                    break;
                case SlotTest::Kind::Absent:
                    key += "/absent";
                    break;
            }
        }
        key += "]";
    }
    for (const auto& a : p.actions) {
        switch (a.kind) {
            case BufferAction::Kind::ModifySlot:
                key += "A[mod:" + a.buffer + "." + a.slot + "=";
                append_ref(key, a.value);
                key += "]";
                break;
            case BufferAction::Kind::ClearBuffer:
                key += "A[clear:" + a.buffer + "]";
                break;
            case BufferAction::Kind::Request: {
                key += "A[req:" + a.request_type;
                for (const auto& [slot, v] : a.request_slots) {
                    key += "|" + slot + "=";
                    append_ref(key, v);
                }
                key += "]";
                break;
            }
            case BufferAction::Kind::MarkDetection:
                key += "A[mark:";
                append_ref(key, a.value);
                key += "]";
                break;
        }
    }
    key += to_string(p.complexity);
    key += p.is_monitor ? "+m" : "-m";
    return key;
}

}  // namespace metasim
