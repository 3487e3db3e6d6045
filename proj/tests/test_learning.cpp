#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include <cmath>

#include "metasim/engine.hpp"
#include "metasim/learning.hpp"

using namespace metasim;

namespace {

Production make_requester() {
    Production p;
    p.id = "fetch";
    p.utility = 1.0;
    p.is_monitor = true;
    p.conditions = {
        BufferPattern{"goal", false, "goal", {SlotTest::eq("phase", std::string("start"))}},
        BufferPattern{"retrieval", true, "", {}}};
    p.actions = {
        BufferAction::request("instr", {{"task", ValueRef::of(std::string("monitor"))}}),
        BufferAction::modify("goal", "phase", ValueRef::of(SlotValue(std::string("waiting"))))};
    return p;
}

Production make_consumer() {
    Production p;
    p.id = "act";
    p.utility = 2.0;
    p.is_monitor = true;
    p.conditions = {
        BufferPattern{"goal", false, "goal", {SlotTest::eq("phase", std::string("waiting"))}},
        BufferPattern{"retrieval", false, "instr", {SlotTest::bind("payload", "v")}}};
    p.actions = {
        BufferAction::modify("goal", "result", ValueRef::variable("v")),
        BufferAction::modify("goal", "phase", ValueRef::of(SlotValue(std::string("done")))),
        BufferAction::clear("retrieval")};
    return p;
}

Chunk make_instr(SlotValue payload) {
    Chunk c;
    c.name = "instr-1";
    c.type_name = "instr";
    c.set_slot("task", std::string("monitor"));
    c.set_slot("payload", std::move(payload));
    return c;
}

// Two-path oracle harness: run the authored pair and the compiled child from
// identical initial states and compare every buffer.
struct TwoPath {
    EngineState pair_engine;
    EngineState child_engine;
};

TwoPath make_two_path(const Production& p1, const Production& p2,
                      const Chunk& instr) {
    EngineState base;
    Chunk g;
    g.name = "g";
    g.type_name = "goal";
    g.set_slot("task", std::string("monitor"));
    g.set_slot("phase", std::string("start"));
    base.buffer("goal").content = g;
    add_chunk(base.memory, instr, 1.0);

    TwoPath tp{base, base};
    tp.pair_engine.add_rule(p1);
    tp.pair_engine.add_rule(p2);
    tp.child_engine.add_rule(compile_pair(p1, p2, instr));
    return tp;
}

bool buffers_equal(const EngineState& a, const EngineState& b) {
    if (a.buffers.size() != b.buffers.size()) return false;
    for (const auto& [name, buf] : a.buffers) {
        const Buffer* other = b.find_buffer(name);
        if (!other) return false;
        if (buf.content.has_value() != other->content.has_value()) return false;
        if (buf.content && !(*buf.content == *other->content)) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE_BEGIN("learning");

TEST_CASE("update_utility: basic step, fixed point, input validation") {
    Production p;
    p.id = "p";
    p.utility = 0.0;
    UtilityParams params{0.2, 10.0, 0.0};

    CHECK(update_utility(p, params, 0.0).utility == doctest::Approx(2.0));

    // R_eff == U is a fixed point
    p.utility = 10.0;
    CHECK(update_utility(p, params, 0.0).utility == doctest::Approx(10.0));

    params.time_cost_per_ms = 0.01;
    p.utility = 9.0;  // R_eff = 10 - 0.01*100 = 9
    CHECK(update_utility(p, params, 100.0).utility == doctest::Approx(9.0));

    CHECK_THROWS_AS(update_utility(p, params, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(update_utility(p, params, std::nan("")), std::invalid_argument);
    UtilityParams bad = params;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(update_utility(p, bad, 0.0), std::invalid_argument);
}

TEST_CASE("repeated updates follow the closed form 7.5*(1 - 0.8^n)") {
    UtilityParams params{0.2, 7.5, 0.0};
    Production p;
    p.id = "p";
    p.utility = 0.0;

    // independent oracle: iterate the recurrence directly
    double oracle = 0.0;
    for (int n = 1; n <= 40; ++n) {
        p = update_utility(p, params, 0.0);
        oracle += 0.2 * (7.5 - oracle);
        CHECK(p.utility == doctest::Approx(oracle).epsilon(1e-13));
        CHECK(p.utility ==
              doctest::Approx(7.5 * (1.0 - std::pow(0.8, n))).epsilon(1e-12));
    }
}

TEST_CASE("utility convergence is exactly geometric for random parameters") {
    Rng rng(515);
    for (int draw = 0; draw < 50; ++draw) {
        UtilityParams params;
        params.alpha = rng.uniform(0.05, 1.0);
        params.reward_magnitude = rng.uniform(-5.0, 15.0);
        params.time_cost_per_ms = rng.uniform(0.0, 0.05);
        const double elapsed = rng.uniform(0.0, 500.0);
        const double r_eff =
            params.reward_magnitude - params.time_cost_per_ms * elapsed;

        Production p;
        p.id = "p";
        p.utility = rng.uniform(-10.0, 10.0);
        const double gap0 = std::abs(p.utility - r_eff);
        for (int n = 1; n <= 25; ++n) {
            p = update_utility(p, params, elapsed);
            const double expected = std::pow(1.0 - params.alpha, n) * gap0;
            CHECK(std::abs(std::abs(p.utility - r_eff) - expected) <=
                  1e-12 * std::max(1.0, expected));
        }
    }
}

TEST_CASE("reward-speed ordering: the faster production ends higher") {
    UtilityParams params{0.2, 10.0, 0.02};
    Production fast, slow;
    fast.id = "fast";
    slow.id = "slow";
    for (int n = 0; n < 200; ++n) {
        fast = update_utility(fast, params, 40.0);
        slow = update_utility(slow, params, 300.0);
    }
    CHECK(fast.utility > slow.utility);
    CHECK(fast.utility == doctest::Approx(10.0 - 0.02 * 40.0).epsilon(1e-6));
    CHECK(slow.utility == doctest::Approx(10.0 - 0.02 * 300.0).epsilon(1e-6));
}

TEST_CASE("compile_pair: structure of the compiled child") {
    Production p1 = make_requester();
    Production p2 = make_consumer();
    Chunk instr = make_instr(7.0);

    Production child = compile_pair(p1, p2, instr);

    CHECK(child.provenance == Provenance::Compiled);
    CHECK(child.complexity == Complexity::Simple);
    CHECK(child.utility == 0.0);
    CHECK(child.is_monitor);

    // no retrieval machinery anywhere
    for (const auto& c : child.conditions) CHECK(c.buffer != "retrieval");
    for (const auto& a : child.actions) {
        CHECK(a.kind != BufferAction::Kind::Request);
        if (a.kind == BufferAction::Kind::ClearBuffer) CHECK(a.buffer != "retrieval");
    }

    // the retrieved payload is baked in as a constant
    bool writes_payload_constant = false;
    for (const auto& a : child.actions)
        if (a.kind == BufferAction::Kind::ModifySlot && a.slot == "result" &&
            !a.value.is_var && a.value.value == SlotValue(7.0))
            writes_payload_constant = true;
    CHECK(writes_payload_constant);

    // p2's goal test on the slot p1 writes resolves away, so the child
    // matches the pre-pair goal state
    bool requires_start = false;
    for (const auto& c : child.conditions)
        for (const auto& t : c.tests)
            if (t.slot == "phase" && t.kind == SlotTest::Kind::Eq &&
                t.value == SlotValue(std::string("start")))
                requires_start = true;
    CHECK(requires_start);

    CHECK(validate_production(child).empty());
}

TEST_CASE("compile_pair: precondition violations") {
    Production p1 = make_requester();
    Production p2 = make_consumer();
    Chunk instr = make_instr(7.0);

    Production no_request = p1;
    no_request.actions = {BufferAction::clear("goal")};
    CHECK_THROWS_AS(compile_pair(no_request, p2, instr), std::invalid_argument);

    Production no_consume = p2;
    no_consume.conditions = {BufferPattern{"goal", false, "goal", {}}};
    CHECK_THROWS_AS(compile_pair(p1, no_consume, instr), std::invalid_argument);

    Chunk wrong_type = instr;
    wrong_type.type_name = "other";
    CHECK_THROWS_AS(compile_pair(p1, p2, wrong_type), std::invalid_argument);
}

TEST_CASE("record_compilation: identical recompiles merge, not duplicate") {
    Production p1 = make_requester();
    p1.utility = 4.0;
    Production p2 = make_consumer();
    p2.utility = 8.0;
    Chunk instr = make_instr(7.0);

    std::vector<Production> rules = {p1, p2};
    std::sort(rules.begin(), rules.end(),
              [](const Production& a, const Production& b) { return a.id < b.id; });
    CompilationTracker tracker;
    UtilityParams params{0.2, 0.0, 0.0};

    auto first = record_compilation(tracker, rules, p1, p2, instr, 100.0, params);
    CHECK(first.created);
    CHECK(rules.size() == 3);
    CHECK(tracker.records.size() == 1);
    CHECK(tracker.records[0].recreation_count == 0);
    CHECK(first.child_utility == 0.0);

    auto second = record_compilation(tracker, rules, p1, p2, instr, 200.0, params);
    CHECK_FALSE(second.created);
    CHECK(rules.size() == 3);
    CHECK(tracker.records.size() == 1);
    CHECK(tracker.records[0].recreation_count == 1);
    // one step from 0 toward the parents' mean (6.0) at alpha 0.2
    CHECK(second.child_utility == doctest::Approx(0.2 * 6.0));

    // a different retrieved chunk compiles a different child
    auto third =
        record_compilation(tracker, rules, p1, p2, make_instr(9.0), 300.0, params);
    CHECK(third.created);
    CHECK(rules.size() == 4);
}

TEST_CASE("compilation soundness: child equals pair on randomized chunks") {
    Rng rng(2718);
    MechanismConfig cfg;
    cfg.noise_scale = 0.0;
    const std::vector<std::string> symbols = {"alpha", "beta", "gamma", "delta"};

    for (int trial = 0; trial < 300; ++trial) {
        SlotValue payload = rng.uniform01() < 0.5
                                ? SlotValue(symbols[rng.uniform_int(0, 3)])
                                : SlotValue(rng.uniform(-100.0, 100.0));
        Chunk instr = make_instr(payload);
        const int extra = rng.uniform_int(0, 3);
        for (int k = 0; k < extra; ++k)
            instr.set_slot("extra" + std::to_string(k),
                           symbols[rng.uniform_int(0, 3)]);

        Production p1 = make_requester();
        Production p2 = make_consumer();
        if (extra > 0 && rng.uniform01() < 0.5) {
            // a second variable bound from the retrieved chunk
            p2.conditions[1].tests.push_back(SlotTest::bind("extra0", "w"));
            p2.actions.push_back(
                BufferAction::modify("goal", "note", ValueRef::variable("w")));
        }

        TwoPath tp = make_two_path(p1, p2, instr);
        run_until(tp.pair_engine, cfg, 600.0);
        run_until(tp.child_engine, cfg, 600.0);
        REQUIRE(buffers_equal(tp.pair_engine, tp.child_engine));
    }
}

TEST_CASE("compilation speedup: child episode skips latency plus one firing") {
    Production p1 = make_requester();
    Production p2 = make_consumer();
    Chunk instr = make_instr(1.0);
    TwoPath tp = make_two_path(p1, p2, instr);
    MechanismConfig cfg;
    cfg.noise_scale = 0.0;
    run_until(tp.pair_engine, cfg, 600.0);
    run_until(tp.child_engine, cfg, 600.0);

    auto episode = [](const EventLog& log) {
        double start = -1, end = -1;
        for (const auto& e : log.entries) {
            if (e.kind == EventKind::FireStart && start < 0) start = e.time_ms;
            if (e.kind == EventKind::FireEnd) end = e.time_ms;
        }
        return end - start;
    };
    const double pair_ms = episode(tp.pair_engine.log);
    const double child_ms = episode(tp.child_engine.log);
    CHECK(pair_ms == 300.0);  // latency + two firings
    CHECK(child_ms == 50.0);
    CHECK(pair_ms - child_ms ==
          doctest::Approx(cfg.default_latency_ms + 50.0));
}

TEST_CASE("classify_stage thresholds and the empty-window error") {
    auto window = [](int compiled, int total) {
        std::vector<EpisodeRecord> eps;
        for (int i = 0; i < total; ++i)
            eps.push_back({0, 0.0, "p", i < compiled});
        return eps;
    };
    auto w0 = window(0, 20);
    CHECK(classify_stage(w0) == StageLabel::Novice);
    auto w10 = window(10, 20);
    CHECK(classify_stage(w10) == StageLabel::Intermediate);
    auto w19 = window(19, 20);
    CHECK(classify_stage(w19) == StageLabel::Expert);
    auto w2 = window(2, 20);  // f = 0.1 boundary goes to Intermediate
    CHECK(classify_stage(w2) == StageLabel::Intermediate);
    CHECK_THROWS_AS(classify_stage(std::vector<EpisodeRecord>{}),
                    std::invalid_argument);
}

TEST_SUITE_END();
