#include "metasim/event_log.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace metasim {

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Match: return "match";
        case EventKind::Select: return "select";
        case EventKind::FireStart: return "fire-start";
        case EventKind::FireEnd: return "fire-end";
        case EventKind::RetrievalStart: return "retrieval-start";
        case EventKind::RetrievalComplete: return "retrieval-complete";
        case EventKind::SignalDeposit: return "signal-deposit";
        case EventKind::Detection: return "detection";
        case EventKind::Compile: return "compile";
        case EventKind::Utility: return "utility";
    }
    return "?";
}

void EventLog::append(double time_ms, EventKind kind, std::string production,
                      std::string detail) {
    if (!entries.empty() && time_ms < entries.back().time_ms)
        throw std::logic_error("event log times must be non-decreasing");
    if (production.empty()) production = "-";
    if (detail.empty()) detail = "-";
    entries.push_back({time_ms, kind, std::move(production), std::move(detail)});
}

void write_log_csv(const EventLog& log, std::ostream& out) {
    out << "time_ms,kind,production_id,detail\n";
    char buf[64];
    for (const auto& e : log.entries) {
        std::snprintf(buf, sizeof buf, "%.3f", e.time_ms);
        out << buf << ',' << to_string(e.kind) << ',' << e.production << ','
            << e.detail << '\n';
    }
}

}  // namespace metasim
