#pragma once

#include <cstdint>
#include <span>

namespace tsmux {

/// CRC-32/MPEG-2: polynomial 0x04C11DB7, init 0xFFFFFFFF, no reflection,
/// no final XOR. Running it over a section including its stored CRC yields 0.
std::uint32_t crc32_mpeg(std::span<const std::uint8_t> bytes) noexcept;

} // namespace tsmux
