#include "tsmux/crc32.hpp"

#include <array>

namespace tsmux {

namespace {

constexpr std::array<std::uint32_t, 256> make_table() noexcept
{
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t crc = i << 24;
        for (int bit = 0; bit < 8; ++bit)
            crc = (crc & 0x80000000u) ? (crc << 1) ^ 0x04C11DB7u : crc << 1;
        table[i] = crc;
    }
    return table;
}

constexpr auto kTable = make_table();

} // namespace

std::uint32_t crc32_mpeg(std::span<const std::uint8_t> bytes) noexcept
{
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes)
        crc = (crc << 8) ^ kTable[((crc >> 24) ^ b) & 0xFF];
    return crc;
}

} // namespace tsmux
