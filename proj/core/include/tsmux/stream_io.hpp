#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "tsmux/packet.hpp"

namespace tsmux {

using PacketCallback = std::function<void(const PacketBytes&)>;

/// Splits an arbitrary byte stream into aligned 188-byte packets. Sync is
/// acquired with sync_scan and re-acquired whenever a packet boundary lacks
/// the sync byte; bytes skipped while hunting are counted, never emitted.
class PacketFramer {
public:
    explicit PacketFramer(std::size_t lock_count = 5) : lock_count_(lock_count) {}

    void push(std::span<const std::uint8_t> data, const PacketCallback& on_packet);
    /// Flushes what remains, relaxing the lock requirement to the number of
    /// packets still buffered.
    void finish(const PacketCallback& on_packet);

    std::uint64_t bytes_skipped() const noexcept { return skipped_; }
    std::uint64_t packets_emitted() const noexcept { return emitted_; }

private:
    void drain(bool final, const PacketCallback& on_packet);

    std::size_t lock_count_;
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    bool locked_ = false;
    std::uint64_t skipped_ = 0;
    std::uint64_t emitted_ = 0;
};

struct FramingStats {
    std::uint64_t packets = 0;
    std::uint64_t bytes_skipped = 0;
};

/// Streams every packet of `in` through `on_packet` with bounded memory.
FramingStats for_each_packet(std::istream& in, const PacketCallback& on_packet);

std::vector<PacketBytes> packets_from_bytes(std::span<const std::uint8_t> bytes);
std::vector<PacketBytes> read_packets(std::istream& in);

std::vector<std::uint8_t> to_bytes(std::span<const PacketBytes> packets);
void write_packets(std::ostream& out, std::span<const PacketBytes> packets);

} // namespace tsmux
