#include "tsmux/extractor.hpp"

#include <algorithm>
#include <string>

namespace tsmux {

Extractor::Extractor(Pid data_pid) : pid_(data_pid) {}

void Extractor::push(const PacketBytes& packet)
{
    const PacketView view(packet);
    if (view.pid() != pid_)
        return;
    scratch_.clear();
    assembler_.push(view, scratch_);
    for (const auto& section : scratch_) {
        DataChunk chunk;
        try {
            chunk = chunk_from_section(section);
        } catch (const Error&) {
            ++malformed_;
            continue;
        }
        if (chunk.chunk_count != chunk_count_for(chunk.total_length)) {
            ++malformed_;
            continue;
        }
        if (!have_message_) {
            have_message_ = true;
            header_ = chunk;
            header_.payload.clear();
            chunks_.resize(chunk.chunk_count);
            present_.assign(chunk.chunk_count, false);
        } else if (chunk.message_id != header_.message_id) {
            ++foreign_;
            continue;
        } else if (chunk.chunk_count != header_.chunk_count || chunk.total_length != header_.total_length) {
            ++malformed_;
            continue;
        }
        const std::uint64_t offset = std::uint64_t{chunk.chunk_index} * kMaxChunkPayload;
        const std::uint64_t expected = offset < header_.total_length
            ? std::min<std::uint64_t>(kMaxChunkPayload, header_.total_length - offset)
            : 0;
        if (chunk.payload.size() != expected) {
            ++malformed_;
            continue;
        }
        if (present_[chunk.chunk_index]) {
            ++duplicates_;
            continue;
        }
        present_[chunk.chunk_index] = true;
        chunks_[chunk.chunk_index] = std::move(chunk.payload);
    }
}

ExtractResult Extractor::finish()
{
    if (!have_message_)
        throw Error(ErrorCode::NoData, "no DataChunk sections on PID " + std::to_string(pid_.value()));
    ExtractResult result;
    result.message_id = header_.message_id;
    result.chunk_count = header_.chunk_count;
    result.total_length = header_.total_length;
    result.payload.assign(header_.total_length, 0);
    for (std::uint32_t i = 0; i < header_.chunk_count; ++i) {
        const std::uint64_t offset = std::uint64_t{i} * kMaxChunkPayload;
        if (present_[i]) {
            std::copy(chunks_[i].begin(), chunks_[i].end(), result.payload.begin() + static_cast<std::ptrdiff_t>(offset));
            continue;
        }
        result.missing_chunks.push_back(i);
        const std::uint64_t length = offset < header_.total_length
            ? std::min<std::uint64_t>(kMaxChunkPayload, header_.total_length - offset)
            : 0;
        result.gaps.push_back({i, offset, length});
    }
    result.crc_failures = assembler_.stats().crc_mismatches;
    result.continuity_gaps = assembler_.stats().continuity_gaps;
    result.duplicate_chunks = duplicates_;
    result.foreign_chunks = foreign_;
    result.malformed_chunks = malformed_ + assembler_.stats().malformed;
    return result;
}

ExtractResult extract(std::span<const PacketBytes> stream, Pid data_pid)
{
    Extractor extractor(data_pid);
    for (const auto& packet : stream)
        extractor.push(packet);
    return extractor.finish();
}

std::vector<std::uint8_t> extract_payload(std::span<const PacketBytes> stream, Pid data_pid)
{
    auto result = extract(stream, data_pid);
    if (!result.complete())
        throw Error(ErrorCode::Incomplete, std::to_string(result.missing_chunks.size()) + " of "
                                               + std::to_string(result.chunk_count) + " chunks missing");
    return std::move(result.payload);
}

} // namespace tsmux
