#include "tsmux/packet.hpp"

#include <algorithm>
#include <string>

namespace tsmux {

namespace {

constexpr std::uint8_t kFlagDiscontinuity = 0x80;
constexpr std::uint8_t kFlagRandomAccess = 0x40;
constexpr std::uint8_t kFlagEsPriority = 0x20;
constexpr std::uint8_t kFlagPcr = 0x10;
constexpr std::uint8_t kOtherFlagsMask = 0x0F;
constexpr std::size_t kPcrFieldSize = 6;

Pcr decode_pcr(const std::uint8_t* p) noexcept
{
    Pcr pcr;
    pcr.base = (std::uint64_t{p[0]} << 25) | (std::uint64_t{p[1]} << 17) | (std::uint64_t{p[2]} << 9)
        | (std::uint64_t{p[3]} << 1) | (std::uint64_t{p[4]} >> 7);
    pcr.reserved = static_cast<std::uint8_t>((p[4] >> 1) & 0x3F);
    pcr.extension = static_cast<std::uint16_t>(((p[4] & 0x01) << 8) | p[5]);
    return pcr;
}

void encode_pcr(const Pcr& pcr, std::uint8_t* p) noexcept
{
    p[0] = static_cast<std::uint8_t>(pcr.base >> 25);
    p[1] = static_cast<std::uint8_t>(pcr.base >> 17);
    p[2] = static_cast<std::uint8_t>(pcr.base >> 9);
    p[3] = static_cast<std::uint8_t>(pcr.base >> 1);
    p[4] = static_cast<std::uint8_t>(((pcr.base & 0x01) << 7) | ((pcr.reserved & 0x3F) << 1) | ((pcr.extension >> 8) & 0x01));
    p[5] = static_cast<std::uint8_t>(pcr.extension);
}

} // namespace

Pcr Pcr::from_ticks(std::uint64_t ticks)
{
    ticks %= kWrapTicks;
    Pcr pcr;
    pcr.base = ticks / 300;
    pcr.extension = static_cast<std::uint16_t>(ticks % 300);
    return pcr;
}

std::int64_t pcr_delta(std::uint64_t a_ticks, std::uint64_t b_ticks) noexcept
{
    constexpr auto wrap = static_cast<std::int64_t>(Pcr::kWrapTicks);
    auto d = (static_cast<std::int64_t>(b_ticks % Pcr::kWrapTicks) - static_cast<std::int64_t>(a_ticks % Pcr::kWrapTicks)) % wrap;
    if (d >= wrap / 2)
        d -= wrap;
    else if (d < -wrap / 2)
        d += wrap;
    return d;
}

bool pcr_before(std::uint64_t a_ticks, std::uint64_t b_ticks) noexcept
{
    return pcr_delta(a_ticks, b_ticks) > 0;
}

std::size_t AdaptationField::length() const noexcept
{
    if (zero_length)
        return 0;
    return 1 + (pcr ? kPcrFieldSize : 0) + extra.size() + stuffing;
}

TsPacket parse_packet(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() != kPacketSize)
        throw Error(ErrorCode::MalformedPacket, "packet must be exactly 188 bytes, got " + std::to_string(bytes.size()));
    if (bytes[0] != kSyncByte)
        throw Error(ErrorCode::BadSync, "byte 0 is not 0x47");

    TsPacket p;
    p.transport_error = (bytes[1] & 0x80) != 0;
    p.payload_unit_start = (bytes[1] & 0x40) != 0;
    p.priority = (bytes[1] & 0x20) != 0;
    p.pid = Pid{static_cast<std::uint16_t>(((bytes[1] & 0x1F) << 8) | bytes[2])};
    p.scrambling = static_cast<std::uint8_t>(bytes[3] >> 6);
    p.adaptation_control = static_cast<AdaptationControl>((bytes[3] >> 4) & 0x03);
    p.continuity_counter = bytes[3] & 0x0F;

    if (p.adaptation_control == AdaptationControl::Reserved)
        throw Error(ErrorCode::MalformedPacket, "reserved adaptation_field_control value 00");

    std::size_t pos = 4;
    if (p.adaptation_control == AdaptationControl::AdaptationOnly
        || p.adaptation_control == AdaptationControl::AdaptationAndPayload) {
        const std::size_t length = bytes[4];
        if (length > kPacketBodySize - 1)
            throw Error(ErrorCode::BadAdaptationLength, "adaptation field length " + std::to_string(length) + " exceeds 183");
        if (p.adaptation_control == AdaptationControl::AdaptationOnly && length != kPacketBodySize - 1)
            throw Error(ErrorCode::BadAdaptationLength, "adaptation-only packet must have a 183-byte field");

        AdaptationField af;
        if (length == 0) {
            af.zero_length = true;
        } else {
            const std::uint8_t flags = bytes[5];
            af.discontinuity = (flags & kFlagDiscontinuity) != 0;
            af.random_access = (flags & kFlagRandomAccess) != 0;
            af.es_priority = (flags & kFlagEsPriority) != 0;
            af.other_flags = flags & kOtherFlagsMask;
            std::size_t cursor = 6;
            const std::size_t end = 5 + length;
            if (flags & kFlagPcr) {
                if (length < 1 + kPcrFieldSize)
                    throw Error(ErrorCode::BadAdaptationLength, "PCR flag set but field too short");
                af.pcr = decode_pcr(bytes.data() + cursor);
                cursor += kPcrFieldSize;
            }
            const auto rest = bytes.subspan(cursor, end - cursor);
            const bool all_stuffing = std::all_of(rest.begin(), rest.end(), [](std::uint8_t b) { return b == 0xFF; });
            if (af.other_flags == 0 && all_stuffing)
                af.stuffing = rest.size();
            else
                af.extra.assign(rest.begin(), rest.end());
        }
        p.adaptation = std::move(af);
        pos = 5 + length;
    }

    if (p.adaptation_control == AdaptationControl::PayloadOnly
        || p.adaptation_control == AdaptationControl::AdaptationAndPayload)
        p.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());

    return p;
}

void serialize_packet(const TsPacket& p, std::span<std::uint8_t, kPacketSize> out)
{
    const auto afc = p.adaptation_control;
    if (afc == AdaptationControl::Reserved)
        throw Error(ErrorCode::MalformedPacket, "reserved adaptation_field_control value 00");
    const bool wants_af = afc == AdaptationControl::AdaptationOnly || afc == AdaptationControl::AdaptationAndPayload;
    const bool wants_payload = afc == AdaptationControl::PayloadOnly || afc == AdaptationControl::AdaptationAndPayload;
    if (wants_af != p.adaptation.has_value())
        throw Error(ErrorCode::MalformedPacket, "adaptation field presence disagrees with adaptation_field_control");
    if (!wants_payload && !p.payload.empty())
        throw Error(ErrorCode::MalformedPacket, "payload present but adaptation_field_control excludes it");
    if (p.continuity_counter > 0x0F || p.scrambling > 0x03)
        throw Error(ErrorCode::MalformedPacket, "header field out of range");

    std::size_t af_bytes = 0;
    if (p.adaptation) {
        const auto& af = *p.adaptation;
        if (af.zero_length && (af.pcr || af.other_flags || !af.extra.empty() || af.stuffing || af.discontinuity
                               || af.random_access || af.es_priority))
            throw Error(ErrorCode::BadAdaptationLength, "zero-length adaptation field cannot carry content");
        af_bytes = 1 + af.length();
    }
    const std::size_t used = af_bytes + p.payload.size();
    if (used > kPacketBodySize)
        throw Error(ErrorCode::Overflow, "adaptation field and payload need " + std::to_string(used) + " bytes, only 184 available");
    if (used < kPacketBodySize)
        throw Error(ErrorCode::BadAdaptationLength, "adaptation field and payload fill " + std::to_string(used) + " of 184 bytes");

    out[0] = kSyncByte;
    out[1] = static_cast<std::uint8_t>((p.transport_error ? 0x80 : 0) | (p.payload_unit_start ? 0x40 : 0)
                                       | (p.priority ? 0x20 : 0) | ((p.pid.value() >> 8) & 0x1F));
    out[2] = static_cast<std::uint8_t>(p.pid.value() & 0xFF);
    out[3] = static_cast<std::uint8_t>((p.scrambling << 6) | (static_cast<std::uint8_t>(afc) << 4) | p.continuity_counter);

    std::size_t pos = 4;
    if (p.adaptation) {
        const auto& af = *p.adaptation;
        out[pos++] = static_cast<std::uint8_t>(af.length());
        if (!af.zero_length) {
            out[pos++] = static_cast<std::uint8_t>((af.discontinuity ? kFlagDiscontinuity : 0)
                                                   | (af.random_access ? kFlagRandomAccess : 0)
                                                   | (af.es_priority ? kFlagEsPriority : 0) | (af.pcr ? kFlagPcr : 0)
                                                   | (af.other_flags & kOtherFlagsMask));
            if (af.pcr) {
                encode_pcr(*af.pcr, out.data() + pos);
                pos += kPcrFieldSize;
            }
            std::copy(af.extra.begin(), af.extra.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
            pos += af.extra.size();
            std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(pos), af.stuffing, std::uint8_t{0xFF});
            pos += af.stuffing;
        }
    }
    std::copy(p.payload.begin(), p.payload.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
}

PacketBytes serialize_packet(const TsPacket& packet)
{
    PacketBytes out;
    serialize_packet(packet, out);
    return out;
}

bool is_null(const TsPacket& packet) noexcept
{
    return packet.pid == kNullPid;
}

TsPacket make_null_packet(std::uint8_t continuity_counter)
{
    TsPacket p;
    p.pid = kNullPid;
    p.adaptation_control = AdaptationControl::PayloadOnly;
    p.continuity_counter = continuity_counter & 0x0F;
    p.payload.assign(kPacketBodySize, 0xFF);
    return p;
}

std::optional<Pcr> pcr_of(const TsPacket& packet) noexcept
{
    if (!packet.adaptation)
        return std::nullopt;
    return packet.adaptation->pcr;
}

TsPacket make_payload_packet(Pid pid, std::uint8_t continuity_counter, bool payload_unit_start,
                             std::span<const std::uint8_t> payload, std::optional<Pcr> pcr)
{
    TsPacket p;
    p.pid = pid;
    p.payload_unit_start = payload_unit_start;
    p.continuity_counter = continuity_counter & 0x0F;
    p.payload.assign(payload.begin(), payload.end());

    const std::size_t room = kPacketBodySize - payload.size();
    if (payload.size() > kPacketBodySize || (pcr && room < 2 + kPcrFieldSize))
        throw Error(ErrorCode::Overflow, "payload does not fit in one packet");
    if (room == 0) {
        p.adaptation_control = AdaptationControl::PayloadOnly;
        return p;
    }
    AdaptationField af;
    if (room == 1) {
        af.zero_length = true;
    } else {
        af.pcr = pcr;
        af.stuffing = room - 2 - (pcr ? kPcrFieldSize : 0);
    }
    p.adaptation = std::move(af);
    p.adaptation_control = payload.empty() ? AdaptationControl::AdaptationOnly : AdaptationControl::AdaptationAndPayload;
    return p;
}

std::optional<std::size_t> sync_scan(std::span<const std::uint8_t> bytes, std::size_t lock_count) noexcept
{
    lock_count = std::max<std::size_t>(lock_count, 1);
    const std::size_t span = (lock_count - 1) * kPacketSize;
    for (std::size_t offset = 0; offset + span < bytes.size(); ++offset) {
        bool locked = true;
        for (std::size_t i = 0; i < lock_count && locked; ++i)
            locked = bytes[offset + i * kPacketSize] == kSyncByte;
        if (locked)
            return offset;
    }
    return std::nullopt;
}

std::span<const std::uint8_t> PacketView::payload() const noexcept
{
    if (!has_payload())
        return {};
    std::size_t start = 4;
    if (has_adaptation()) {
        start = 5 + std::size_t{bytes_[4]};
        if (start > kPacketSize)
            return {};
    }
    return std::span<const std::uint8_t>(bytes_).subspan(start);
}

std::optional<Pcr> PacketView::pcr() const noexcept
{
    if (!has_adaptation() || bytes_[4] < 1 + kPcrFieldSize || (bytes_[5] & kFlagPcr) == 0)
        return std::nullopt;
    return decode_pcr(bytes_.data() + 6);
}

} // namespace tsmux
