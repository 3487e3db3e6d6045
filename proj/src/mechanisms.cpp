#include "metasim/mechanisms.hpp"

#include <algorithm>
#include <cmath>

namespace metasim {

std::vector<std::string> validate(const MechanismConfig& cfg) {
    std::vector<std::string> errors;
    auto positive = [&](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v))
            errors.push_back(std::string(field) + " must be positive (got " +
                             std::to_string(v) + ")");
    };
    positive(cfg.cycle_time_ms, "cycle_time_ms");
    positive(cfg.clock_scale, "clock_scale");
    positive(cfg.latency_factor_ms, "latency_factor_ms");
    positive(cfg.default_latency_ms, "default_latency_ms");
    if (cfg.noise_scale < 0.0 || !std::isfinite(cfg.noise_scale))
        errors.push_back("noise_scale must be >= 0 (got " +
                         std::to_string(cfg.noise_scale) + ")");
    return errors;
}

std::vector<Instantiation> apply_focus(const MechanismConfig& cfg,
                                       std::vector<Instantiation> conflict) {
    if (cfg.focus_mode == FocusMode::Open) return conflict;
    std::erase_if(conflict, [](const Instantiation& i) { return !i.is_monitor; });
    return conflict;
}

const char* to_string(FocusMode m) {
    return m == FocusMode::Open ? "open" : "narrow";
}

const char* to_string(DetectAnchor a) {
    return a == DetectAnchor::Start ? "start" : "end";
}

}  // namespace metasim
