#pragma once
// Slot/value records: the unit of declarative content that flows through
// buffers and declarative memory.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace metasim {

// Reference to another chunk by id; distinct from a plain symbol.
struct ChunkRef {
    std::string id;
    bool operator==(const ChunkRef&) const = default;
};

// symbol | number | reference-to-chunk-id
using SlotValue = std::variant<std::string, double, ChunkRef>;

std::string to_string(const SlotValue& v);

// Typed slot/value record. Slot names are unique; order is insertion order.
// Once a chunk is placed in a buffer or memory it is only ever copied, never
// mutated in place.
struct Chunk {
    std::string name;  // id; unique within declarative memory, may be empty
                       // for buffer-local chunks
    std::string type_name;
    std::vector<std::pair<std::string, SlotValue>> slots;

    const SlotValue* slot(std::string_view slot_name) const;
    void set_slot(const std::string& slot_name, SlotValue v);

    bool operator==(const Chunk&) const = default;
};

std::string to_string(const Chunk& c);

// Parses one declarative-memory config line:
//   id type slot=value ... @activation
// Numbers parse as numbers, "&id" as chunk references, anything else as a
// symbol. The trailing @activation is optional and defaults to 0.
std::pair<Chunk, double> parse_chunk_line(const std::string& line);

SlotValue parse_slot_value(const std::string& text);

}  // namespace metasim
