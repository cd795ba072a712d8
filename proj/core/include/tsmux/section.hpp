#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsmux/packet.hpp"

namespace tsmux {

inline constexpr std::size_t kMaxPsiSectionLength = 1021;
inline constexpr std::size_t kMaxPrivateSectionLength = 4093;

/// A long-form (or, with section_syntax = false, short-form) PSI/private
/// section. `body` is everything between the 8-byte header and the CRC.
struct Section {
    std::uint8_t table_id = 0;
    bool section_syntax = true;
    bool private_indicator = false;
    std::uint16_t table_id_extension = 0;
    std::uint8_t version = 0;
    bool current_next = true;
    std::uint8_t section_number = 0;
    std::uint8_t last_section_number = 0;
    std::vector<std::uint8_t> body;
    std::uint32_t crc = 0;

    /// Value of the 12-bit section_length field.
    std::size_t length() const noexcept { return section_syntax ? 5 + body.size() + 4 : body.size(); }
    std::size_t total_size() const noexcept { return 3 + length(); }

    bool operator==(const Section&) const = default;
};

/// Serialized bytes using the stored CRC.
std::vector<std::uint8_t> section_bytes(const Section& section);

/// Recomputes the CRC over the serialized header and body.
void seal(Section& section);

/// Parses exactly one section; the span must cover it precisely.
/// Throws CrcMismatch or MalformedBody.
Section parse_section(std::span<const std::uint8_t> bytes);

constexpr std::uint8_t bump_version(std::uint8_t version) noexcept
{
    return static_cast<std::uint8_t>((version + 1) & 0x1F);
}

struct AssemblyStats {
    std::size_t crc_mismatches = 0;
    std::size_t continuity_gaps = 0;
    std::size_t malformed = 0;
    std::size_t duplicates = 0;
};

/// Reassembles sections from the packets of one PID. Honors pointer_field,
/// concatenates continuations, stops at each declared length and at 0xFF
/// stuffing. Sections failing CRC and partial sections cut by a continuity
/// gap are dropped and counted.
class SectionAssembler {
public:
    void push(const PacketView& packet, std::vector<Section>& out);
    void reset() noexcept;

    const AssemblyStats& stats() const noexcept { return stats_; }

private:
    void append(std::span<const std::uint8_t> data, std::vector<Section>& out);
    void drain(std::vector<Section>& out);
    void drop_partial() noexcept;

    std::vector<std::uint8_t> buffer_;
    bool in_section_ = false;
    int last_cc_ = -1;
    AssemblyStats stats_;
};

struct AssemblyResult {
    std::vector<Section> sections;
    AssemblyStats stats;
};

AssemblyResult assemble_sections(std::span<const TsPacket> packets);

/// Splits a section over as many packets as needed: the first has
/// payload_unit_start and pointer_field 0, the last is padded with 0xFF.
std::vector<TsPacket> sectionize(const Section& section, Pid pid, std::uint8_t cc_start);
std::vector<PacketBytes> sectionize_bytes(const Section& section, Pid pid, std::uint8_t cc_start);

} // namespace tsmux
