#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsmux/datachunk.hpp"
#include "tsmux/packet.hpp"

namespace tsmux {

/// Byte range of the payload not covered by any received chunk.
struct PayloadGap {
    std::uint32_t chunk_index = 0;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

struct ExtractResult {
    /// total_length bytes; ranges listed in `gaps` are zero-filled.
    std::vector<std::uint8_t> payload;
    std::uint32_t message_id = 0;
    std::uint32_t chunk_count = 0;
    std::uint32_t total_length = 0;
    std::vector<std::uint32_t> missing_chunks;
    std::vector<PayloadGap> gaps;
    std::size_t crc_failures = 0;
    std::size_t continuity_gaps = 0;
    std::size_t duplicate_chunks = 0;
    /// Chunks of a different message (a later re-broadcast) that were ignored.
    std::size_t foreign_chunks = 0;
    /// Sections that are not well-formed DataChunks or disagree with the first chunk's header.
    std::size_t malformed_chunks = 0;

    bool complete() const noexcept { return missing_chunks.empty(); }
};

/// Collects DataChunk sections from one PID. The first message seen wins;
/// chunks are deduplicated by (message_id, chunk_index).
class Extractor {
public:
    explicit Extractor(Pid data_pid);

    void push(const PacketBytes& packet);
    /// Throws NoData when no valid chunk arrived.
    ExtractResult finish();

private:
    Pid pid_;
    SectionAssembler assembler_;
    std::vector<Section> scratch_;
    bool have_message_ = false;
    DataChunk header_;
    std::vector<std::vector<std::uint8_t>> chunks_;
    std::vector<bool> present_;
    std::size_t duplicates_ = 0;
    std::size_t foreign_ = 0;
    std::size_t malformed_ = 0;
};

/// Throws NoData; an incomplete result is returned with its gap map.
ExtractResult extract(std::span<const PacketBytes> stream, Pid data_pid);

/// Returns the payload or throws Incomplete.
std::vector<std::uint8_t> extract_payload(std::span<const PacketBytes> stream, Pid data_pid);

} // namespace tsmux
