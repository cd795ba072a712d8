#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tsmux/error.hpp"

namespace tsmux {

inline constexpr std::size_t kPacketSize = 188;
inline constexpr std::size_t kPacketBits = kPacketSize * 8;
inline constexpr std::size_t kPacketBodySize = 184; // everything after the 4-byte header
inline constexpr std::uint8_t kSyncByte = 0x47;

using PacketBytes = std::array<std::uint8_t, kPacketSize>;

/// 13-bit packet identifier.
class Pid {
public:
    static constexpr std::uint16_t kMax = 0x1FFF;

    constexpr Pid() noexcept = default;
    constexpr explicit Pid(std::uint16_t value) : value_(value)
    {
        if (value > kMax)
            throw Error(ErrorCode::InvalidArgument, "PID exceeds 13 bits");
    }

    constexpr std::uint16_t value() const noexcept { return value_; }
    constexpr auto operator<=>(const Pid&) const noexcept = default;

private:
    std::uint16_t value_ = 0;
};

inline constexpr Pid kPatPid{0x0000};
inline constexpr Pid kSdtPid{0x0011};
inline constexpr Pid kNullPid{0x1FFF};

/// Program clock reference: 33-bit 90 kHz base plus 9-bit 27 MHz extension.
struct Pcr {
    static constexpr std::uint64_t kBaseModulus = std::uint64_t{1} << 33;
    static constexpr std::uint64_t kTicksPerSecond = 27'000'000;
    /// Period of the full 27 MHz counter.
    static constexpr std::uint64_t kWrapTicks = kBaseModulus * 300;

    std::uint64_t base = 0;
    std::uint16_t extension = 0;
    std::uint8_t reserved = 0x3F; // 6 bits between base and extension, kept for byte-exact round trips

    constexpr std::uint64_t ticks() const noexcept { return base * 300 + extension; }
    static Pcr from_ticks(std::uint64_t ticks);

    bool operator==(const Pcr&) const = default;
};

/// Signed distance b - a in 27 MHz ticks, taken modulo the PCR wrap period.
std::int64_t pcr_delta(std::uint64_t a_ticks, std::uint64_t b_ticks) noexcept;

/// True when `a` precedes `b` under modular comparison (valid while the two
/// are less than half a wrap period apart).
bool pcr_before(std::uint64_t a_ticks, std::uint64_t b_ticks) noexcept;

enum class AdaptationControl : std::uint8_t {
    Reserved = 0b00,
    PayloadOnly = 0b01,
    AdaptationOnly = 0b10,
    AdaptationAndPayload = 0b11,
};

/// Adaptation field. Only the flags the toolkit acts on are decoded; OPCR,
/// splice countdown, private data and extensions stay opaque in `extra`.
struct AdaptationField {
    /// A zero-length field (single length byte, no flags byte).
    bool zero_length = false;
    bool discontinuity = false;
    bool random_access = false;
    bool es_priority = false;
    std::optional<Pcr> pcr;
    /// Low nibble of the flags byte: OPCR, splicing point, private data, extension.
    std::uint8_t other_flags = 0;
    /// Raw bytes following the PCR when other_flags is non-zero (stuffing included).
    std::vector<std::uint8_t> extra;
    /// Count of 0xFF stuffing bytes when `extra` is empty.
    std::size_t stuffing = 0;

    /// Value of the adaptation_field_length byte.
    std::size_t length() const noexcept;

    bool operator==(const AdaptationField&) const = default;
};

struct TsPacket {
    Pid pid;
    bool transport_error = false;
    bool payload_unit_start = false;
    bool priority = false;
    std::uint8_t scrambling = 0;
    AdaptationControl adaptation_control = AdaptationControl::PayloadOnly;
    std::uint8_t continuity_counter = 0;
    std::optional<AdaptationField> adaptation;
    std::vector<std::uint8_t> payload;

    bool operator==(const TsPacket&) const = default;
};

TsPacket parse_packet(std::span<const std::uint8_t> bytes);
PacketBytes serialize_packet(const TsPacket& packet);
void serialize_packet(const TsPacket& packet, std::span<std::uint8_t, kPacketSize> out);

bool is_null(const TsPacket& packet) noexcept;
TsPacket make_null_packet(std::uint8_t continuity_counter = 0);
std::optional<Pcr> pcr_of(const TsPacket& packet) noexcept;

/// Builds a packet carrying `payload` (at most 184 bytes, fewer when a PCR is
/// attached) and pads the remainder with adaptation-field stuffing.
TsPacket make_payload_packet(Pid pid, std::uint8_t continuity_counter, bool payload_unit_start,
                             std::span<const std::uint8_t> payload,
                             std::optional<Pcr> pcr = std::nullopt);

/// Returns the smallest offset at which `lock_count` consecutive packet-aligned
/// positions all hold the sync byte.
std::optional<std::size_t> sync_scan(std::span<const std::uint8_t> bytes, std::size_t lock_count = 5) noexcept;

/// Zero-copy accessor over a raw 188-byte packet. Header fields are decoded on
/// demand; nothing is validated beyond what each accessor needs.
class PacketView {
public:
    explicit PacketView(std::span<const std::uint8_t, kPacketSize> bytes) noexcept : bytes_(bytes) {}
    explicit PacketView(const PacketBytes& bytes) noexcept : bytes_(bytes) {}

    std::span<const std::uint8_t, kPacketSize> bytes() const noexcept { return bytes_; }

    bool sync_ok() const noexcept { return bytes_[0] == kSyncByte; }
    bool transport_error() const noexcept { return (bytes_[1] & 0x80) != 0; }
    bool payload_unit_start() const noexcept { return (bytes_[1] & 0x40) != 0; }
    std::uint16_t pid_value() const noexcept { return static_cast<std::uint16_t>(((bytes_[1] & 0x1F) << 8) | bytes_[2]); }
    Pid pid() const noexcept { return Pid{pid_value()}; }
    std::uint8_t scrambling() const noexcept { return static_cast<std::uint8_t>(bytes_[3] >> 6); }
    AdaptationControl adaptation_control() const noexcept
    {
        return static_cast<AdaptationControl>((bytes_[3] >> 4) & 0x03);
    }
    std::uint8_t continuity_counter() const noexcept { return bytes_[3] & 0x0F; }
    bool is_null() const noexcept { return pid_value() == kNullPid.value(); }

    bool has_adaptation() const noexcept { return (bytes_[3] & 0x20) != 0; }
    bool has_payload() const noexcept { return (bytes_[3] & 0x10) != 0; }

    /// Payload bytes, or an empty span when the packet has none or its
    /// adaptation field length is out of range.
    std::span<const std::uint8_t> payload() const noexcept;
    std::optional<Pcr> pcr() const noexcept;

private:
    std::span<const std::uint8_t, kPacketSize> bytes_;
};

} // namespace tsmux

template <>
struct std::hash<tsmux::Pid> {
    std::size_t operator()(tsmux::Pid pid) const noexcept { return pid.value(); }
};
