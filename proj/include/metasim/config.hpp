#pragma once
// Plain-text experiment configuration: key = value lines grouped into
// [experiment], [engine], [signals], [memory], [training] and [probe]
// sections. Unknown keys are hard errors so an ablation cannot silently
// misfire. The [memory] section holds raw declarative chunk lines instead of
// key = value pairs.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "metasim/chunk.hpp"
#include "metasim/learning.hpp"
#include "metasim/mechanisms.hpp"
#include "metasim/psychophysics.hpp"
#include "metasim/signals.hpp"

namespace metasim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TaskKind { MonitorOnly, MonitorWithDistractors };
const char* to_string(TaskKind t);

// Training stimulus statistics (one trace per training trial).
struct TrainingSignalParams {
    double rate_per_s = 1.0;
    double duration_min_ms = 150.0;
    double duration_max_ms = 450.0;
    double amplitude = 1.0;
    double horizon_ms = 2000.0;
};

struct TrainingProtocol {
    int n_trials = 60;
    int probe_every = 10;
    int pretrain_trials = 40;  // ablation arms that rely on compilation
    int stage_window = 20;     // episodes per stage classification window
    UtilityParams utility;
};

struct ProbeProtocol {
    StimulusAxis axis = StimulusAxis::Duration;
    std::vector<double> levels = {15, 30, 60, 120, 240, 360, 520, 700};
    int trials_per_level = 200;
    int n_boot = 500;
    double criterion = 0.5;
    ProbeSignalParams sig;
};

struct Config {
    std::string name = "default";
    TaskKind task = TaskKind::MonitorWithDistractors;
    int distractor_count = 3;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    MechanismConfig mech;
    TrainingSignalParams signals;
    GateModel gate;
    std::vector<std::pair<Chunk, double>> extra_chunks;  // [memory] lines
    TrainingProtocol training;
    ProbeProtocol probe;
};

// The canonical experiment: the distractor task under Narrow focus with
// compilation on (the practice condition); ablation arms override the
// mechanism toggles against this baseline.
Config default_config();

// Throws ConfigError with every problem found (unknown keys, bad values,
// violated constraints), joined line by line.
Config parse_config(const std::string& text);
Config load_config_file(const std::string& path);

// Re-validation of a programmatically built config; empty means valid.
std::vector<std::string> validate_config(const Config& cfg);

}  // namespace metasim
