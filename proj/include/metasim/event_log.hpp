#pragma once
// Append-only, replayable event log. Entry times are non-decreasing; the
// CSV form is the engine's external trace format.

#include <iosfwd>
#include <string>
#include <vector>

namespace metasim {

enum class EventKind {
    Match,
    Select,
    FireStart,
    FireEnd,
    RetrievalStart,
    RetrievalComplete,
    SignalDeposit,
    Detection,
    Compile,   // learning: pair compiled or recreated
    Utility,   // learning: utility update applied
};

const char* to_string(EventKind k);

struct LogEntry {
    double time_ms = 0.0;
    EventKind kind = EventKind::Match;
    std::string production;  // "-" when not applicable
    std::string detail;      // "-" when empty

    bool operator==(const LogEntry&) const = default;
};

struct EventLog {
    std::vector<LogEntry> entries;

    void append(double time_ms, EventKind kind, std::string production,
                std::string detail);
    bool empty() const { return entries.empty(); }
};

// CSV columns: time_ms,kind,production_id,detail ("-" for empty fields).
void write_log_csv(const EventLog& log, std::ostream& out);

}  // namespace metasim
