#include "metasim/chunk.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace metasim {

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::string to_string(const SlotValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
    return "&" + std::get<ChunkRef>(v).id;
}

const SlotValue* Chunk::slot(std::string_view slot_name) const {
    for (const auto& [name, value] : slots)
        if (name == slot_name) return &value;
    return nullptr;
}

void Chunk::set_slot(const std::string& slot_name, SlotValue v) {
    for (auto& [name, value] : slots) {
        if (name == slot_name) {
            value = std::move(v);
            return;
        }
    }
    slots.emplace_back(slot_name, std::move(v));
}

std::string to_string(const Chunk& c) {
    std::string out = c.name.empty() ? std::string("_") : c.name;
    out += " " + c.type_name;
    for (const auto& [name, value] : c.slots)
        out += " " + name + "=" + to_string(value);
    return out;
}

SlotValue parse_slot_value(const std::string& text) {
    if (!text.empty() && text.front() == '&') return ChunkRef{text.substr(1)};
    try {
        std::size_t pos = 0;
        double d = std::stod(text, &pos);
        if (pos == text.size()) return d;
    } catch (const std::exception&) {
    }
    return text;
}

std::pair<Chunk, double> parse_chunk_line(const std::string& line) {
    std::istringstream in(line);
    std::string token;
    std::vector<std::string> tokens;
    while (in >> token) tokens.push_back(token);
    if (tokens.size() < 2)
        throw std::invalid_argument("chunk line needs at least 'id type': " + line);

    Chunk c;
    c.name = tokens[0];
    c.type_name = tokens[1];
    double activation = 0.0;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t.front() == '@') {
            if (i + 1 != tokens.size())
                throw std::invalid_argument("@activation must be last: " + line);
            activation = std::stod(t.substr(1));
            break;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("expected slot=value, got '" + t + "'");
        std::string slot = t.substr(0, eq);
        if (c.slot(slot))
            throw std::invalid_argument("duplicate slot '" + slot + "': " + line);
        c.set_slot(slot, parse_slot_value(t.substr(eq + 1)));
    }
    if (c.type_name.empty())
        throw std::invalid_argument("empty chunk type: " + line);
    return {c, activation};
}

}  // namespace metasim
