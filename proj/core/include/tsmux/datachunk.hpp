#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsmux/section.hpp"

namespace tsmux {

inline constexpr std::uint8_t kDataChunkTableId = 0x80;
inline constexpr std::uint8_t kDataChunkFormatVersion = 0x01;
inline constexpr std::size_t kMaxChunkPayload = 1000;
/// Version byte plus four big-endian u32 fields.
inline constexpr std::size_t kDataChunkHeaderSize = 17;

/// One slice of an inserted payload, carried as a private section.
/// Wire layout is documented in docs/datachunk-format.md.
struct DataChunk {
    std::uint32_t message_id = 0;
    std::uint32_t chunk_index = 0;
    std::uint32_t chunk_count = 0;
    std::uint32_t total_length = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const DataChunk&) const = default;
};

Section chunk_to_section(const DataChunk& chunk);
/// Throws WrongTableId or MalformedBody.
DataChunk chunk_from_section(const Section& section);

/// Number of chunks needed for a payload of `total_length` bytes (at least one).
std::uint32_t chunk_count_for(std::uint64_t total_length) noexcept;

/// FNV-1a (32-bit) over the payload; identifies re-broadcasts of the same message.
class MessageHasher {
public:
    void update(std::span<const std::uint8_t> bytes) noexcept;
    std::uint32_t value() const noexcept { return hash_; }

private:
    std::uint32_t hash_ = 2166136261u;
};

std::uint32_t message_id_for(std::span<const std::uint8_t> payload) noexcept;

} // namespace tsmux
