#include "metasim/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace metasim {

EngineState::EngineState() {
    for (const char* name : {"goal", "interoceptive", "retrieval"})
        buffers.emplace(name, Buffer{name, std::nullopt, std::nullopt});
}

Buffer& EngineState::buffer(const std::string& name) {
    auto it = buffers.find(name);
    if (it == buffers.end())
        it = buffers.emplace(name, Buffer{name, std::nullopt, std::nullopt}).first;
    return it->second;
}

const Buffer* EngineState::find_buffer(const std::string& name) const {
    auto it = buffers.find(name);
    return it == buffers.end() ? nullptr : &it->second;
}

Production* EngineState::find_rule(std::string_view id) {
    for (auto& r : rules)
        if (r.id == id) return &r;
    return nullptr;
}

const Production* EngineState::find_rule(std::string_view id) const {
    for (const auto& r : rules)
        if (r.id == id) return &r;
    return nullptr;
}

void EngineState::add_rule(Production p) {
    auto errors = validate_production(p);
    if (!errors.empty())
        throw std::invalid_argument("ill-formed production: " + errors.front());
    if (find_rule(p.id))
        throw std::invalid_argument("duplicate production id '" + p.id + "'");
    auto pos = std::lower_bound(
        rules.begin(), rules.end(), p,
        [](const Production& a, const Production& b) { return a.id < b.id; });
    rules.insert(pos, std::move(p));
}

std::vector<Instantiation> match_conflict_set(const EngineState& state) {
    std::vector<Instantiation> conflict;
    for (const auto& rule : state.rules) {  // rules sorted by id
        Bindings bindings;
        bool ok = true;
        std::optional<std::string> sample_event;
        bool consumed_retrieval = false;
        for (const auto& pat : rule.conditions) {
            const Buffer* buf = state.find_buffer(pat.buffer);
            if (pat.require_empty) {
                if (buf && (buf->content || buf->pending_request)) ok = false;
                if (!ok) break;
                continue;
            }
            if (!buf || !buf->content) {
                ok = false;
                break;
            }
            if (!match_pattern(pat, *buf->content, bindings)) {
                ok = false;
                break;
            }
            if (buf->content->type_name == kAffectSampleType) {
                if (const SlotValue* ev = buf->content->slot("event"))
                    if (const auto* id = std::get_if<std::string>(ev))
                        sample_event = *id;
            }
            if (pat.buffer == "retrieval") consumed_retrieval = true;
        }
        if (!ok) continue;
        Instantiation inst;
        inst.production_id = rule.id;
        inst.bindings = std::move(bindings);
        inst.utility = rule.utility;
        inst.is_monitor = rule.is_monitor;
        inst.matched_sample_event = std::move(sample_event);
        inst.consumed_retrieval = consumed_retrieval;
        conflict.push_back(std::move(inst));
    }
    return conflict;
}

std::optional<Instantiation> select_production(
    const std::vector<Instantiation>& conflict, Rng& rng, double noise_scale) {
    if (noise_scale < 0.0)
        throw std::invalid_argument("noise_scale must be >= 0");
    if (conflict.empty()) return std::nullopt;
    const Instantiation* best = nullptr;
    double best_score = 0.0;
    for (const auto& inst : conflict) {
        const double score = inst.utility + rng.logistic(noise_scale);
        // conflict is id-ordered, so keeping the first maximum breaks ties
        // toward the smaller id
        if (!best || score > best_score) {
            best = &inst;
            best_score = score;
        }
    }
    return *best;
}

double firing_duration(const Production& p, const MechanismConfig& cfg,
                       Rng& rng) {
    if (!(cfg.cycle_time_ms > 0.0))
        throw std::invalid_argument("cycle_time_ms must be positive");
    if (!(cfg.clock_scale > 0.0))
        throw std::invalid_argument("clock_scale must be positive");
    double duration = cfg.cycle_time_ms;
    if (cfg.complexity_timing)
        duration = p.complexity == Complexity::Simple ? rng.uniform(34.0, 44.0)
                                                      : rng.uniform(59.0, 73.0);
    return duration * cfg.clock_scale;
}

namespace {

// Interoceptive refresh at cycle start: stale samples are overwritten, and
// the buffer is cleared when nothing passes the gate.
void refresh_interoceptive(EngineState& s, double now_ms) {
    Buffer& intero = s.buffer("interoceptive");
    auto sample = sample_interoceptive(s.stimulus, now_ms, s.gate, s.rng);
    if (sample) {
        const std::string* ev = nullptr;
        if (const SlotValue* v = sample->slot("event"))
            ev = std::get_if<std::string>(v);
        s.log.append(now_ms, EventKind::SignalDeposit, "-",
                     ev ? "event=" + *ev : std::string());
    }
    intero.content = std::move(sample);
}

void deliver_due_retrieval(EngineState& s, double now_ms) {
    Buffer& rb = s.buffer("retrieval");
    if (!rb.pending_request || rb.pending_request->completes_at_ms > now_ms)
        return;
    RetrievalTicket ticket = *rb.pending_request;
    fulfill(ticket, rb, now_ms);
    char buf[64];
    std::snprintf(buf, sizeof buf, "completed=%.3f", ticket.completes_at_ms);
    std::string detail =
        ticket.outcome ? "chunk=" + ticket.outcome->name : std::string("failure");
    s.log.append(now_ms, EventKind::RetrievalComplete, ticket.requester,
                 detail + ";" + buf);
    if (ticket.outcome)
        s.pending_delivery =
            EngineState::PendingDelivery{ticket.requester, *ticket.outcome};
    else
        s.pending_delivery.reset();
}

std::string fire_start_detail(const Instantiation& inst) {
    std::string detail;
    if (inst.matched_sample_event)
        detail = "sample=" + *inst.matched_sample_event;
    if (inst.consumed_retrieval)
        detail += (detail.empty() ? "" : ";") + std::string("retrieval");
    return detail;
}

void apply_actions(EngineState& s, const Production& rule,
                   const Instantiation& inst, const MechanismConfig& cfg,
                   double t_start, double t_end) {
    std::vector<std::string> detections;
    for (const auto& a : rule.actions)
        if (a.kind == BufferAction::Kind::MarkDetection)
            detections.push_back(to_string(a.value.resolve(inst.bindings)));
    // Start-anchored marks must precede any fire-end-time entries in the log.
    if (cfg.detect_at == DetectAnchor::Start)
        for (const auto& id : detections)
            s.log.append(t_start, EventKind::Detection, rule.id, "event=" + id);

    for (const auto& a : rule.actions) {
        switch (a.kind) {
            case BufferAction::Kind::ModifySlot: {
                Buffer& buf = s.buffer(a.buffer);
                if (!buf.content)
                    throw std::logic_error("'" + rule.id + "' modifies empty buffer '" +
                                           a.buffer + "'");
                Chunk updated = *buf.content;  // placed chunks stay immutable
                updated.set_slot(a.slot, a.value.resolve(inst.bindings));
                buf.content = std::move(updated);
                break;
            }
            case BufferAction::Kind::ClearBuffer: {
                Buffer& buf = s.buffer(a.buffer);
                buf.content.reset();
                buf.pending_request.reset();
                break;
            }
            case BufferAction::Kind::Request: {
                ChunkQuery query;
                query.type_name = a.request_type;
                for (const auto& [slot, v] : a.request_slots)
                    query.tests.push_back(SlotTest::eq(slot, v.resolve(inst.bindings)));
                // issued at fire end; a new request preempts a pending one
                RetrievalTicket ticket =
                    issue_retrieval(s.memory, query, t_end, cfg, rule.id);
                Buffer& rb = s.buffer("retrieval");
                rb.content.reset();
                rb.pending_request = ticket;
                char buf[64];
                std::snprintf(buf, sizeof buf, "completes=%.3f",
                              ticket.completes_at_ms);
                s.log.append(t_end, EventKind::RetrievalStart, rule.id, buf);
                break;
            }
            case BufferAction::Kind::MarkDetection:
                break;  // handled above / below
        }
    }
    if (cfg.detect_at == DetectAnchor::End)
        for (const auto& id : detections)
            s.log.append(t_end, EventKind::Detection, rule.id, "event=" + id);
}

void maybe_compile(EngineState& s, const MechanismConfig& cfg,
                   const Instantiation& inst, double now_ms) {
    if (!cfg.compilation_enabled) return;
    if (!s.pending_delivery || !inst.consumed_retrieval) return;
    const Production* p1_ptr = s.find_rule(s.pending_delivery->requester);
    const Production* p2_ptr = s.find_rule(inst.production_id);
    if (!p1_ptr || !p2_ptr || p1_ptr->id == p2_ptr->id) return;
    // copies: record_compilation grows s.rules
    const Production p1 = *p1_ptr;
    const Production p2 = *p2_ptr;

    auto outcome = record_compilation(s.compiler, s.rules, p1, p2,
                                      s.pending_delivery->chunk, now_ms,
                                      s.learning);
    const CompilationRecord* rec = nullptr;
    for (const auto& r : s.compiler.records)
        if (r.child == outcome.child_id) rec = &r;
    char detail[160];
    std::snprintf(detail, sizeof detail, "parents=%s+%s;recreations=%d",
                  rec->parent_first.c_str(), rec->parent_second.c_str(),
                  rec->recreation_count);
    s.log.append(now_ms, EventKind::Compile, outcome.child_id, detail);
}

}  // namespace

void step(EngineState& s, const MechanismConfig& cfg) {
    const double t0 = s.clock_ms;
    refresh_interoceptive(s, t0);
    deliver_due_retrieval(s, t0);

    auto conflict = apply_focus(cfg, match_conflict_set(s));
    s.log.append(t0, EventKind::Match, "-",
                 "conflict=" + std::to_string(conflict.size()));

    auto chosen = select_production(conflict, s.rng, cfg.noise_scale);
    if (!chosen) {
        // Idle tick, shortened so a pending delivery is picked up exactly on
        // time. Sampling continues each tick, so a signal arriving mid-wait
        // can still trigger an alternative production next cycle.
        double next = t0 + cfg.effective_cycle_ms();
        const Buffer& rb = s.buffer("retrieval");
        if (rb.pending_request && rb.pending_request->completes_at_ms > t0)
            next = std::min(next, rb.pending_request->completes_at_ms);
        s.clock_ms = next;
        return;
    }

    // Fire from a copy: compilation may grow s.rules mid-firing, which would
    // invalidate a pointer into it.
    const Production rule = *s.find_rule(chosen->production_id);
    char sel[48];
    std::snprintf(sel, sizeof sel, "utility=%.6g", rule.utility);
    s.log.append(t0, EventKind::Select, rule.id, sel);

    const double duration = firing_duration(rule, cfg, s.rng);
    const double t1 = t0 + duration;
    s.log.append(t0, EventKind::FireStart, rule.id, fire_start_detail(*chosen));

    apply_actions(s, rule, *chosen, cfg, t0, t1);
    maybe_compile(s, cfg, *chosen, t1);
    s.pending_delivery.reset();  // any firing breaks pair adjacency

    char dur[48];
    std::snprintf(dur, sizeof dur, "duration=%.3f", duration);
    s.log.append(t1, EventKind::FireEnd, rule.id, dur);
    s.clock_ms = t1;
}

void run_until(EngineState& s, const MechanismConfig& cfg, double t_end_ms) {
    if (t_end_ms < s.clock_ms)
        throw std::invalid_argument("run_until: t_end before current clock");
    while (s.clock_ms < t_end_ms) step(s, cfg);
}

}  // namespace metasim
