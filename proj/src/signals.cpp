#include "metasim/signals.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace metasim {

const SignalEvent* SignalTrace::active_at(double t_ms) const {
    for (const auto& e : events) {
        if (e.onset_ms > t_ms) break;  // sorted by onset
        if (e.active_at(t_ms)) return &e;
    }
    return nullptr;
}

SignalTrace generate_trace(double rate_per_s, double duration_min_ms,
                           double duration_max_ms, double amplitude,
                           double horizon_ms, Rng& rng) {
    if (!(rate_per_s > 0.0))
        throw std::invalid_argument("signal rate must be positive");
    if (duration_min_ms > duration_max_ms || !(duration_min_ms > 0.0))
        throw std::invalid_argument("signal duration range invalid");
    if (!(amplitude > 0.0))
        throw std::invalid_argument("signal amplitude must be positive");
    if (!(horizon_ms > 0.0))
        throw std::invalid_argument("signal horizon must be positive");

    SignalTrace trace;
    trace.horizon_ms = horizon_ms;
    const double rate_per_ms = rate_per_s / 1000.0;
    double t = 0.0;
    int n = 0;
    double last_end = -1.0;
    while (true) {
        t += rng.exponential(rate_per_ms);
        if (t >= horizon_ms) break;
        double duration = rng.uniform(duration_min_ms, duration_max_ms);
        // keep-earlier overlap rejection; also reject events outliving the
        // horizon so every kept event ends before it
        if (t < last_end || t + duration >= horizon_ms) continue;
        SignalEvent ev;
        ev.id = "ev" + std::to_string(n++);
        ev.onset_ms = t;
        ev.duration_ms = duration;
        ev.amplitude = amplitude;
        last_end = ev.end_ms();
        trace.events.push_back(std::move(ev));
    }
    return trace;
}

std::optional<Chunk> sample_interoceptive(const SignalTrace& trace, double t_ms,
                                          const GateModel& gate, Rng& rng) {
    if (gate.gate_sd < 0.0)
        throw std::invalid_argument("gate sd must be non-negative");
    const SignalEvent* active = trace.active_at(t_ms);
    if (!active) return std::nullopt;
    double noise = gate.gate_sd > 0.0 ? rng.normal(0.0, gate.gate_sd) : 0.0;
    if (!(active->amplitude + noise > gate.gate_mean)) return std::nullopt;
    Chunk sample;
    sample.type_name = kAffectSampleType;
    sample.set_slot("event", active->id);
    sample.set_slot("amplitude", active->amplitude);
    return sample;
}

std::vector<DetectionRecord> score_detections(const SignalTrace& trace,
                                              const EventLog& log) {
    std::vector<DetectionRecord> records;
    records.reserve(trace.events.size());
    for (const auto& ev : trace.events) {
        DetectionRecord rec;
        rec.event_id = ev.id;
        const std::string want = "event=" + ev.id;
        for (const auto& entry : log.entries) {
            if (entry.kind != EventKind::Detection) continue;
            if (entry.detail != want) continue;
            if (entry.time_ms < ev.onset_ms || entry.time_ms > ev.end_ms())
                continue;
            rec.detected = true;
            rec.detect_time_ms = entry.time_ms;
            rec.detecting_production = entry.production;
            break;  // log is time-ordered: first qualifying mark wins
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_trace_csv(const SignalTrace& trace, std::ostream& out) {
    out << "event_id,onset_ms,duration_ms,amplitude\n";
    char buf[128];
    for (const auto& e : trace.events) {
        std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.6g", e.id.c_str(),
                      e.onset_ms, e.duration_ms, e.amplitude);
        out << buf << '\n';
    }
}

SignalTrace read_trace_csv(std::istream& in, double horizon_ms) {
    SignalTrace trace;
    trace.horizon_ms = horizon_ms;
    std::string line;
    if (!std::getline(in, line) || line.rfind("event_id,", 0) != 0)
        throw std::invalid_argument("signal trace CSV missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        SignalEvent e;
        std::string field;
        if (!std::getline(row, e.id, ',')) break;
        std::getline(row, field, ',');
        e.onset_ms = std::stod(field);
        std::getline(row, field, ',');
        e.duration_ms = std::stod(field);
        std::getline(row, field, ',');
        e.amplitude = std::stod(field);
        trace.events.push_back(std::move(e));
    }
    return trace;
}

}  // namespace metasim
