#include "tsmux/stream_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace tsmux {

void PacketFramer::push(std::span<const std::uint8_t> data, const PacketCallback& on_packet)
{
    buf_.insert(buf_.end(), data.begin(), data.end());
    drain(false, on_packet);
}

void PacketFramer::finish(const PacketCallback& on_packet)
{
    drain(true, on_packet);
    skipped_ += buf_.size() - pos_;
    buf_.clear();
    pos_ = 0;
}

void PacketFramer::drain(bool final, const PacketCallback& on_packet)
{
    for (;;) {
        const std::size_t available = buf_.size() - pos_;
        if (!locked_) {
            std::size_t lock = lock_count_;
            if (final)
                lock = std::min(lock, available / kPacketSize);
            if (lock == 0 || available < lock * kPacketSize - (kPacketSize - 1))
                break;
            const auto window = std::span<const std::uint8_t>(buf_).subspan(pos_);
            if (auto offset = sync_scan(window, lock)) {
                skipped_ += *offset;
                pos_ += *offset;
                locked_ = true;
            } else {
                // Keep the tail that could still start a lock once more data arrives.
                const std::size_t keep = final ? 0 : std::min(available, (lock - 1) * kPacketSize + kPacketSize - 1);
                skipped_ += available - keep;
                pos_ += available - keep;
                break;
            }
        }
        while (buf_.size() - pos_ >= kPacketSize) {
            if (buf_[pos_] != kSyncByte) {
                locked_ = false;
                break;
            }
            PacketBytes packet;
            std::copy_n(buf_.begin() + static_cast<std::ptrdiff_t>(pos_), kPacketSize, packet.begin());
            pos_ += kPacketSize;
            ++emitted_;
            on_packet(packet);
        }
        if (locked_ || buf_.size() - pos_ < kPacketSize)
            break;
    }
    if (pos_ > 0 && (pos_ >= buf_.size() / 2 || final)) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
}

FramingStats for_each_packet(std::istream& in, const PacketCallback& on_packet)
{
    PacketFramer framer;
    std::vector<std::uint8_t> chunk(kPacketSize * 512);
    while (in) {
        in.read(reinterpret_cast<char*>(chunk.data()), static_cast<std::streamsize>(chunk.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0)
            break;
        framer.push(std::span<const std::uint8_t>(chunk.data(), got), on_packet);
    }
    if (in.bad())
        throw Error(ErrorCode::Io, "read failure");
    framer.finish(on_packet);
    return {framer.packets_emitted(), framer.bytes_skipped()};
}

std::vector<PacketBytes> packets_from_bytes(std::span<const std::uint8_t> bytes)
{
    std::vector<PacketBytes> packets;
    packets.reserve(bytes.size() / kPacketSize);
    PacketFramer framer;
    const PacketCallback collect = [&](const PacketBytes& p) { packets.push_back(p); };
    framer.push(bytes, collect);
    framer.finish(collect);
    return packets;
}

std::vector<PacketBytes> read_packets(std::istream& in)
{
    std::vector<PacketBytes> packets;
    for_each_packet(in, [&](const PacketBytes& p) { packets.push_back(p); });
    return packets;
}

std::vector<std::uint8_t> to_bytes(std::span<const PacketBytes> packets)
{
    std::vector<std::uint8_t> bytes;
    bytes.reserve(packets.size() * kPacketSize);
    for (const auto& p : packets)
        bytes.insert(bytes.end(), p.begin(), p.end());
    return bytes;
}

void write_packets(std::ostream& out, std::span<const PacketBytes> packets)
{
    for (const auto& p : packets)
        out.write(reinterpret_cast<const char*>(p.data()), kPacketSize);
    if (!out)
        throw Error(ErrorCode::Io, "write failure");
}

} // namespace tsmux
