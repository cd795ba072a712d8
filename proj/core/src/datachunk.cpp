#include "tsmux/datachunk.hpp"

#include <string>

namespace tsmux {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t pos)
{
    return (std::uint32_t{b[pos]} << 24) | (std::uint32_t{b[pos + 1]} << 16) | (std::uint32_t{b[pos + 2]} << 8)
        | std::uint32_t{b[pos + 3]};
}

} // namespace

Section chunk_to_section(const DataChunk& chunk)
{
    if (chunk.payload.size() > kMaxChunkPayload)
        throw Error(ErrorCode::Overflow, "chunk payload exceeds 1000 bytes");
    if (chunk.chunk_index >= chunk.chunk_count)
        throw Error(ErrorCode::InvalidArgument, "chunk_index must be below chunk_count");
    Section s;
    s.table_id = kDataChunkTableId;
    s.private_indicator = true;
    s.table_id_extension = static_cast<std::uint16_t>(chunk.message_id & 0xFFFF);
    s.body.reserve(kDataChunkHeaderSize + chunk.payload.size());
    s.body.push_back(kDataChunkFormatVersion);
    put_u32(s.body, chunk.message_id);
    put_u32(s.body, chunk.chunk_index);
    put_u32(s.body, chunk.chunk_count);
    put_u32(s.body, chunk.total_length);
    s.body.insert(s.body.end(), chunk.payload.begin(), chunk.payload.end());
    seal(s);
    return s;
}

DataChunk chunk_from_section(const Section& section)
{
    if (section.table_id != kDataChunkTableId)
        throw Error(ErrorCode::WrongTableId, "data chunk expects table_id 0x80, got " + std::to_string(section.table_id));
    const auto& b = section.body;
    if (!section.section_syntax || b.size() < kDataChunkHeaderSize)
        throw Error(ErrorCode::MalformedBody, "data chunk body shorter than its header");
    if (b[0] != kDataChunkFormatVersion)
        throw Error(ErrorCode::MalformedBody, "unsupported data chunk format version " + std::to_string(b[0]));
    DataChunk chunk;
    chunk.message_id = read_u32(b, 1);
    chunk.chunk_index = read_u32(b, 5);
    chunk.chunk_count = read_u32(b, 9);
    chunk.total_length = read_u32(b, 13);
    chunk.payload.assign(b.begin() + kDataChunkHeaderSize, b.end());
    if (chunk.chunk_index >= chunk.chunk_count || chunk.payload.size() > kMaxChunkPayload)
        throw Error(ErrorCode::MalformedBody, "data chunk header out of range");
    return chunk;
}

std::uint32_t chunk_count_for(std::uint64_t total_length) noexcept
{
    if (total_length == 0)
        return 1;
    return static_cast<std::uint32_t>((total_length + kMaxChunkPayload - 1) / kMaxChunkPayload);
}

void MessageHasher::update(std::span<const std::uint8_t> bytes) noexcept
{
    for (std::uint8_t b : bytes) {
        hash_ ^= b;
        hash_ *= 16777619u;
    }
}

std::uint32_t message_id_for(std::span<const std::uint8_t> payload) noexcept
{
    MessageHasher h;
    h.update(payload);
    return h.value();
}

} // namespace tsmux
