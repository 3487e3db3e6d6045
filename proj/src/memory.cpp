#include "metasim/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metasim {

const DeclarativeMemory::Entry* DeclarativeMemory::find(
    std::string_view chunk_id) const {
    for (const auto& e : entries)
        if (e.chunk.name == chunk_id) return &e;
    return nullptr;
}

void add_chunk(DeclarativeMemory& mem, Chunk chunk, double base_activation) {
    if (chunk.name.empty())
        throw std::invalid_argument("declarative chunks need an id");
    if (mem.find(chunk.name))
        throw std::invalid_argument("duplicate chunk id '" + chunk.name + "'");
    mem.entries.push_back({std::move(chunk), base_activation});
}

RetrievalTicket issue_retrieval(const DeclarativeMemory& mem, ChunkQuery request,
                                double now_ms, const MechanismConfig& cfg,
                                std::string requester) {
    const DeclarativeMemory::Entry* winner = nullptr;
    for (const auto& e : mem.entries) {
        if (!query_matches(request, e.chunk)) continue;
        if (!winner || e.base_activation > winner->base_activation ||
            (e.base_activation == winner->base_activation &&
             e.chunk.name < winner->chunk.name))
            winner = &e;
    }

    double latency = cfg.default_latency_ms;
    if (winner && cfg.activation_latency)
        latency = cfg.latency_factor_ms * std::exp(-winner->base_activation);
    // no retrieval completes in zero time, whatever the activation
    latency = std::max(latency, 1e-6);

    RetrievalTicket ticket;
    ticket.request = std::move(request);
    ticket.issued_at_ms = now_ms;
    ticket.completes_at_ms = now_ms + latency;
    if (winner) ticket.outcome = winner->chunk;
    ticket.requester = std::move(requester);
    return ticket;
}

void fulfill(const RetrievalTicket& ticket, Buffer& retrieval_buffer,
             double clock_ms) {
    if (clock_ms < ticket.completes_at_ms)
        throw std::logic_error("retrieval fulfilled before completion time");
    retrieval_buffer.content =
        ticket.outcome ? *ticket.outcome : make_retrieval_failure(ticket.request);
    retrieval_buffer.pending_request.reset();
}

Chunk make_retrieval_failure(const ChunkQuery& request) {
    Chunk c;
    c.type_name = kRetrievalFailureType;
    c.set_slot("requested", to_string(request));
    return c;
}

}  // namespace metasim
