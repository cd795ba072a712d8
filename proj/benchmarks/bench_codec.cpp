#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "support.hpp"
#include "tsmux/crc32.hpp"
#include "tsmux/packet.hpp"

namespace {

void BM_Crc32Mpeg(benchmark::State& state)
{
    std::mt19937_64 rng(1);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(state.range(0)));
    for (auto& b : data)
        b = static_cast<std::uint8_t>(rng());
    for (auto _ : state)
        benchmark::DoNotOptimize(tsmux::crc32_mpeg(data));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Crc32Mpeg)->Arg(188)->Arg(1024)->Arg(4096);

class PacketCorpus : public benchmark::Fixture {
public:
    void SetUp(const benchmark::State&) override
    {
        std::mt19937_64 rng(2);
        packets.clear();
        for (int i = 0; i < 4096; ++i)
            packets.push_back(tsmux::serialize_packet(tsmux::test::random_packet(rng)));
    }

    std::vector<tsmux::PacketBytes> packets;
};

BENCHMARK_DEFINE_F(PacketCorpus, Parse)(benchmark::State& state)
{
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tsmux::parse_packet(packets[i]));
        i = (i + 1) % packets.size();
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * tsmux::kPacketSize);
}
BENCHMARK_REGISTER_F(PacketCorpus, Parse);

BENCHMARK_DEFINE_F(PacketCorpus, RoundTrip)(benchmark::State& state)
{
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tsmux::serialize_packet(tsmux::parse_packet(packets[i])));
        i = (i + 1) % packets.size();
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * tsmux::kPacketSize);
}
BENCHMARK_REGISTER_F(PacketCorpus, RoundTrip);

} // namespace
