#pragma once
// Declarative store with latency-bearing retrieval: the slow path that
// production compilation later bypasses.

#include <optional>
#include <string>
#include <vector>

#include "metasim/chunk.hpp"
#include "metasim/mechanisms.hpp"
#include "metasim/production.hpp"

namespace metasim {

// Delivered into the retrieval buffer when a request finds nothing, so
// productions can match on the failure.
inline constexpr const char* kRetrievalFailureType = "retrieval-failure";

struct RetrievalTicket {
    ChunkQuery request;
    double issued_at_ms = 0.0;
    double completes_at_ms = 0.0;
    std::optional<Chunk> outcome;  // nullopt = retrieval failure
    std::string requester;         // production that issued the request
};

struct DeclarativeMemory {
    struct Entry {
        Chunk chunk;
        double base_activation = 0.0;
    };
    std::vector<Entry> entries;

    const Entry* find(std::string_view chunk_id) const;
};

// Stores the chunk; duplicate ids are an error.
void add_chunk(DeclarativeMemory& mem, Chunk chunk, double base_activation);

// Resolves the request at issue time: outcome is the highest-activation
// matching chunk (ties by id) or failure. completes_at = now + latency,
// where latency is cfg.default_latency_ms, or latency_factor_ms * exp(-A)
// with A the winner's activation when cfg.activation_latency is on.
// Failures always take the default latency.
RetrievalTicket issue_retrieval(const DeclarativeMemory& mem, ChunkQuery request,
                                double now_ms, const MechanismConfig& cfg,
                                std::string requester = {});

// One-chunk-capacity interface slot productions match against and act upon.
// While a request is pending the buffer holds no content.
struct Buffer {
    std::string name;
    std::optional<Chunk> content;
    std::optional<RetrievalTicket> pending_request;
};

// Places the ticket's outcome (or the failure marker) into the buffer and
// clears the pending request. Fulfilling before completes_at is an error.
void fulfill(const RetrievalTicket& ticket, Buffer& retrieval_buffer,
             double clock_ms);

Chunk make_retrieval_failure(const ChunkQuery& request);

}  // namespace metasim
