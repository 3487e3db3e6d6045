#include "metasim/config.hpp"

#include <fstream>
#include <sstream>

namespace metasim {

const char* to_string(TaskKind t) {
    return t == TaskKind::MonitorOnly ? "monitor_only" : "monitor_with_distractors";
}

Config default_config() {
    Config cfg;
    cfg.mech.focus_mode = FocusMode::Narrow;
    cfg.mech.compilation_enabled = true;
    cfg.probe.sig.horizon_ms = 1000.0;
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct Parser {
    Config cfg;
    std::vector<std::string> errors;

    void fail(int line_no, const std::string& msg) {
        errors.push_back("line " + std::to_string(line_no) + ": " + msg);
    }

    bool parse_bool(const std::string& v, int line_no, const char* key) {
        if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
        if (v == "off" || v == "false" || v == "no" || v == "0") return false;
        fail(line_no, std::string(key) + ": expected on/off, got '" + v + "'");
        return false;
    }

    double parse_double(const std::string& v, int line_no, const char* key) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos == v.size()) return d;
        } catch (const std::exception&) {
        }
        fail(line_no, std::string(key) + ": expected a number, got '" + v + "'");
        return 0.0;
    }

    int parse_int(const std::string& v, int line_no, const char* key) {
        try {
            std::size_t pos = 0;
            long d = std::stol(v, &pos);
            if (pos == v.size()) return int(d);
        } catch (const std::exception&) {
        }
        fail(line_no, std::string(key) + ": expected an integer, got '" + v + "'");
        return 0;
    }

    std::vector<double> parse_double_list(const std::string& v, int line_no,
                                          const char* key) {
        std::vector<double> out;
        std::istringstream in(v);
        std::string item;
        while (std::getline(in, item, ','))
            out.push_back(parse_double(trim(item), line_no, key));
        return out;
    }

    void handle(const std::string& section, const std::string& key,
                const std::string& value, int n) {
        if (section == "experiment") {
            if (key == "name") cfg.name = value;
            else if (key == "task") {
                if (value == "monitor_only") cfg.task = TaskKind::MonitorOnly;
                else if (value == "monitor_with_distractors")
                    cfg.task = TaskKind::MonitorWithDistractors;
                else fail(n, "task: expected monitor_only or monitor_with_distractors");
            } else if (key == "distractor_count")
                cfg.distractor_count = parse_int(value, n, "distractor_count");
            else if (key == "seeds") {
                cfg.seeds.clear();
                std::istringstream in(value);
                std::string item;
                while (std::getline(in, item, ','))
                    cfg.seeds.push_back(
                        std::uint64_t(parse_int(trim(item), n, "seeds")));
            } else fail(n, "unknown key '" + key + "' in [experiment]");
        } else if (section == "engine") {
            auto& m = cfg.mech;
            if (key == "cycle_time_ms") m.cycle_time_ms = parse_double(value, n, key.c_str());
            else if (key == "clock_scale") m.clock_scale = parse_double(value, n, key.c_str());
            else if (key == "compilation") m.compilation_enabled = parse_bool(value, n, key.c_str());
            else if (key == "focus") {
                if (value == "open") m.focus_mode = FocusMode::Open;
                else if (value == "narrow") m.focus_mode = FocusMode::Narrow;
                else fail(n, "focus: expected open or narrow");
            } else if (key == "complexity_timing")
                m.complexity_timing = parse_bool(value, n, key.c_str());
            else if (key == "noise_scale") m.noise_scale = parse_double(value, n, key.c_str());
            else if (key == "activation_latency")
                m.activation_latency = parse_bool(value, n, key.c_str());
            else if (key == "latency_factor_ms")
                m.latency_factor_ms = parse_double(value, n, key.c_str());
            else if (key == "default_latency_ms")
                m.default_latency_ms = parse_double(value, n, key.c_str());
            else if (key == "detect_at") {
                if (value == "start") m.detect_at = DetectAnchor::Start;
                else if (value == "end") m.detect_at = DetectAnchor::End;
                else fail(n, "detect_at: expected start or end");
            } else fail(n, "unknown key '" + key + "' in [engine]");
        } else if (section == "signals") {
            auto& s = cfg.signals;
            if (key == "rate_per_s") s.rate_per_s = parse_double(value, n, key.c_str());
            else if (key == "duration_min_ms") s.duration_min_ms = parse_double(value, n, key.c_str());
            else if (key == "duration_max_ms") s.duration_max_ms = parse_double(value, n, key.c_str());
            else if (key == "amplitude") s.amplitude = parse_double(value, n, key.c_str());
            else if (key == "horizon_ms") s.horizon_ms = parse_double(value, n, key.c_str());
            else if (key == "gate_mean") cfg.gate.gate_mean = parse_double(value, n, key.c_str());
            else if (key == "gate_sd") cfg.gate.gate_sd = parse_double(value, n, key.c_str());
            else fail(n, "unknown key '" + key + "' in [signals]");
        } else if (section == "training") {
            auto& t = cfg.training;
            if (key == "n_trials") t.n_trials = parse_int(value, n, key.c_str());
            else if (key == "probe_every") t.probe_every = parse_int(value, n, key.c_str());
            else if (key == "pretrain_trials") t.pretrain_trials = parse_int(value, n, key.c_str());
            else if (key == "stage_window") t.stage_window = parse_int(value, n, key.c_str());
            else if (key == "alpha") t.utility.alpha = parse_double(value, n, key.c_str());
            else if (key == "reward") t.utility.reward_magnitude = parse_double(value, n, key.c_str());
            else if (key == "time_cost_per_ms")
                t.utility.time_cost_per_ms = parse_double(value, n, key.c_str());
            else fail(n, "unknown key '" + key + "' in [training]");
        } else if (section == "probe") {
            auto& p = cfg.probe;
            if (key == "axis") {
                if (value == "duration") p.axis = StimulusAxis::Duration;
                else if (value == "amplitude") p.axis = StimulusAxis::Amplitude;
                else fail(n, "axis: expected duration or amplitude");
            } else if (key == "levels")
                p.levels = parse_double_list(value, n, key.c_str());
            else if (key == "trials") p.trials_per_level = parse_int(value, n, key.c_str());
            else if (key == "n_boot") p.n_boot = parse_int(value, n, key.c_str());
            else if (key == "criterion") p.criterion = parse_double(value, n, key.c_str());
            else if (key == "duration_default_ms")
                p.sig.duration_default_ms = parse_double(value, n, key.c_str());
            else if (key == "amplitude_default")
                p.sig.amplitude_default = parse_double(value, n, key.c_str());
            else if (key == "onset_pad_ms")
                p.sig.onset_pad_ms = parse_double(value, n, key.c_str());
            else if (key == "horizon_ms")
                p.sig.horizon_ms = parse_double(value, n, key.c_str());
            else fail(n, "unknown key '" + key + "' in [probe]");
        } else {
            fail(n, "unknown section [" + section + "]");
        }
    }
};

}  // namespace

Config parse_config(const std::string& text) {
    Parser p;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        auto hash = line.find('#');
        if (hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                p.fail(line_no, "malformed section header: " + line);
                continue;
            }
            section = line.substr(1, line.size() - 2);
            continue;
        }
        if (section == "memory") {
            try {
                p.cfg.extra_chunks.push_back(parse_chunk_line(line));
            } catch (const std::exception& e) {
                p.fail(line_no, e.what());
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            p.fail(line_no, "expected key = value, got '" + line + "'");
            continue;
        }
        if (section.empty()) {
            p.fail(line_no, "key outside any section: " + line);
            continue;
        }
        p.handle(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                 line_no);
    }

    for (const auto& e : validate_config(p.cfg)) p.errors.push_back(e);
    if (!p.errors.empty()) {
        std::string msg = "config invalid:";
        for (const auto& e : p.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return p.cfg;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<std::string> validate_config(const Config& cfg) {
    std::vector<std::string> errors = validate(cfg.mech);
    if (cfg.seeds.empty()) errors.push_back("seeds must be non-empty");
    if (cfg.task == TaskKind::MonitorWithDistractors && cfg.distractor_count < 1)
        errors.push_back("distractor_count must be >= 1");
    if (!(cfg.signals.rate_per_s > 0)) errors.push_back("rate_per_s must be positive");
    if (!(cfg.signals.duration_min_ms > 0) ||
        cfg.signals.duration_min_ms > cfg.signals.duration_max_ms)
        errors.push_back("signal duration range invalid");
    if (!(cfg.signals.amplitude > 0)) errors.push_back("amplitude must be positive");
    if (!(cfg.signals.horizon_ms > 0)) errors.push_back("horizon_ms must be positive");
    if (cfg.gate.gate_sd < 0) errors.push_back("gate_sd must be >= 0");
    if (cfg.training.n_trials < 1) errors.push_back("n_trials must be >= 1");
    if (cfg.training.probe_every < 1 ||
        cfg.training.probe_every > cfg.training.n_trials)
        errors.push_back("probe_every must be in [1, n_trials]");
    if (cfg.training.pretrain_trials < 0)
        errors.push_back("pretrain_trials must be >= 0");
    if (cfg.training.stage_window < 1)
        errors.push_back("stage_window must be >= 1");
    if (!(cfg.training.utility.alpha > 0) || cfg.training.utility.alpha > 1)
        errors.push_back("alpha must be in (0, 1]");
    if (cfg.training.utility.time_cost_per_ms < 0)
        errors.push_back("time_cost_per_ms must be >= 0");
    if (cfg.probe.levels.size() < 2) errors.push_back("probe needs >= 2 levels");
    for (std::size_t i = 1; i < cfg.probe.levels.size(); ++i)
        if (cfg.probe.levels[i] <= cfg.probe.levels[i - 1]) {
            errors.push_back("probe levels must be strictly increasing");
            break;
        }
    if (cfg.probe.trials_per_level < 1)
        errors.push_back("probe trials must be >= 1");
    if (cfg.probe.n_boot < 100) errors.push_back("n_boot must be >= 100");
    if (!(cfg.probe.criterion > 0) || !(cfg.probe.criterion < 1))
        errors.push_back("criterion must be in (0, 1)");
    if (!(cfg.probe.sig.horizon_ms > 0))
        errors.push_back("probe horizon_ms must be positive");
    return errors;
}

}  // namespace metasim
