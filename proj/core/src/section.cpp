#include "tsmux/section.hpp"

#include <algorithm>
#include <string>

#include "tsmux/crc32.hpp"

namespace tsmux {

namespace {

std::size_t max_length_for(std::uint8_t table_id) noexcept
{
    // PAT, CAT, PMT and TSDT are capped at 1021; everything else may use the full 12 bits.
    return table_id <= 0x03 ? kMaxPsiSectionLength : kMaxPrivateSectionLength;
}

void write_header(const Section& s, std::vector<std::uint8_t>& out)
{
    const std::size_t length = s.length();
    out.push_back(s.table_id);
    out.push_back(static_cast<std::uint8_t>((s.section_syntax ? 0x80 : 0) | (s.private_indicator ? 0x40 : 0) | 0x30
                                            | ((length >> 8) & 0x0F)));
    out.push_back(static_cast<std::uint8_t>(length & 0xFF));
    if (!s.section_syntax)
        return;
    out.push_back(static_cast<std::uint8_t>(s.table_id_extension >> 8));
    out.push_back(static_cast<std::uint8_t>(s.table_id_extension & 0xFF));
    out.push_back(static_cast<std::uint8_t>(0xC0 | ((s.version & 0x1F) << 1) | (s.current_next ? 1 : 0)));
    out.push_back(s.section_number);
    out.push_back(s.last_section_number);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

} // namespace

std::vector<std::uint8_t> section_bytes(const Section& s)
{
    if (s.length() > max_length_for(s.table_id))
        throw Error(ErrorCode::MalformedBody, "section_length " + std::to_string(s.length()) + " exceeds the table limit");
    std::vector<std::uint8_t> out;
    out.reserve(s.total_size());
    write_header(s, out);
    out.insert(out.end(), s.body.begin(), s.body.end());
    if (s.section_syntax)
        put_u32(out, s.crc);
    return out;
}

void seal(Section& s)
{
    if (!s.section_syntax) {
        s.crc = 0;
        return;
    }
    auto bytes = section_bytes(s);
    s.crc = crc32_mpeg(std::span<const std::uint8_t>(bytes).first(bytes.size() - 4));
}

Section parse_section(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 3)
        throw Error(ErrorCode::MalformedBody, "section shorter than its 3-byte header");
    Section s;
    s.table_id = bytes[0];
    s.section_syntax = (bytes[1] & 0x80) != 0;
    s.private_indicator = (bytes[1] & 0x40) != 0;
    const std::size_t length = (static_cast<std::size_t>(bytes[1] & 0x0F) << 8) | bytes[2];
    if (bytes.size() != 3 + length)
        throw Error(ErrorCode::MalformedBody, "declared section_length does not match the available bytes");
    if (!s.section_syntax) {
        s.body.assign(bytes.begin() + 3, bytes.end());
        return s;
    }
    if (length < 9)
        throw Error(ErrorCode::MalformedBody, "long-form section too short");
    if (crc32_mpeg(bytes) != 0)
        throw Error(ErrorCode::CrcMismatch, "section CRC check failed for table 0x" + std::to_string(s.table_id));
    s.table_id_extension = static_cast<std::uint16_t>((bytes[3] << 8) | bytes[4]);
    s.version = static_cast<std::uint8_t>((bytes[5] >> 1) & 0x1F);
    s.current_next = (bytes[5] & 0x01) != 0;
    s.section_number = bytes[6];
    s.last_section_number = bytes[7];
    s.body.assign(bytes.begin() + 8, bytes.end() - 4);
    const auto* c = bytes.data() + bytes.size() - 4;
    s.crc = (std::uint32_t{c[0]} << 24) | (std::uint32_t{c[1]} << 16) | (std::uint32_t{c[2]} << 8) | c[3];
    return s;
}

void SectionAssembler::reset() noexcept
{
    buffer_.clear();
    in_section_ = false;
    last_cc_ = -1;
}

void SectionAssembler::drop_partial() noexcept
{
    buffer_.clear();
    in_section_ = false;
}

void SectionAssembler::push(const PacketView& packet, std::vector<Section>& out)
{
    if (!packet.has_payload() || packet.transport_error())
        return;

    const int cc = packet.continuity_counter();
    if (last_cc_ >= 0) {
        if (cc == last_cc_) {
            ++stats_.duplicates;
            return;
        }
        if (cc != ((last_cc_ + 1) & 0x0F) && in_section_) {
            ++stats_.continuity_gaps;
            drop_partial();
        }
    }
    last_cc_ = cc;

    auto payload = packet.payload();
    if (payload.empty())
        return;

    if (!packet.payload_unit_start()) {
        if (in_section_)
            append(payload, out);
        return;
    }

    const std::size_t pointer = payload[0];
    payload = payload.subspan(1);
    if (pointer > payload.size()) {
        ++stats_.malformed;
        drop_partial();
        return;
    }
    if (in_section_) {
        append(payload.first(pointer), out);
        if (in_section_) {
            // The next section starts here, so whatever is still pending is truncated.
            ++stats_.malformed;
            drop_partial();
        }
    }
    in_section_ = true;
    append(payload.subspan(pointer), out);
}

void SectionAssembler::append(std::span<const std::uint8_t> data, std::vector<Section>& out)
{
    buffer_.insert(buffer_.end(), data.begin(), data.end());
    drain(out);
}

void SectionAssembler::drain(std::vector<Section>& out)
{
    std::size_t pos = 0;
    while (buffer_.size() - pos >= 1) {
        if (buffer_[pos] == 0xFF) {
            pos = buffer_.size();
            in_section_ = false;
            break;
        }
        if (buffer_.size() - pos < 3)
            break;
        const std::size_t length = (static_cast<std::size_t>(buffer_[pos + 1] & 0x0F) << 8) | buffer_[pos + 2];
        if (length > kMaxPrivateSectionLength) {
            ++stats_.malformed;
            pos = buffer_.size();
            in_section_ = false;
            break;
        }
        if (buffer_.size() - pos < 3 + length)
            break;
        try {
            out.push_back(parse_section(std::span<const std::uint8_t>(buffer_).subspan(pos, 3 + length)));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::CrcMismatch)
                ++stats_.crc_mismatches;
            else
                ++stats_.malformed;
        }
        pos += 3 + length;
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
    if (buffer_.empty())
        in_section_ = false;
}

AssemblyResult assemble_sections(std::span<const TsPacket> packets)
{
    AssemblyResult result;
    SectionAssembler assembler;
    for (const auto& p : packets) {
        const auto bytes = serialize_packet(p);
        assembler.push(PacketView(bytes), result.sections);
    }
    result.stats = assembler.stats();
    return result;
}

std::vector<TsPacket> sectionize(const Section& section, Pid pid, std::uint8_t cc_start)
{
    const auto bytes = section_bytes(section);
    std::vector<TsPacket> packets;
    std::size_t pos = 0;
    std::uint8_t cc = cc_start & 0x0F;
    bool first = true;
    while (first || pos < bytes.size()) {
        TsPacket p;
        p.pid = pid;
        p.payload_unit_start = first;
        p.adaptation_control = AdaptationControl::PayloadOnly;
        p.continuity_counter = cc;
        if (first)
            p.payload.push_back(0x00);
        const std::size_t take = std::min(kPacketBodySize - p.payload.size(), bytes.size() - pos);
        p.payload.insert(p.payload.end(), bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;
        p.payload.resize(kPacketBodySize, 0xFF);
        packets.push_back(std::move(p));
        cc = (cc + 1) & 0x0F;
        first = false;
    }
    return packets;
}

std::vector<PacketBytes> sectionize_bytes(const Section& section, Pid pid, std::uint8_t cc_start)
{
    std::vector<PacketBytes> out;
    for (const auto& p : sectionize(section, pid, cc_start))
        out.push_back(serialize_packet(p));
    return out;
}

} // namespace tsmux
