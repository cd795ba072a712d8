#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "support.hpp"
#include "tsmux/allocator.hpp"
#include "tsmux/analyzer.hpp"
#include "tsmux/generator.hpp"
#include "tsmux/inserter.hpp"

namespace {

const std::vector<tsmux::PacketBytes>& stream_38m()
{
    static const auto packets = tsmux::generate_packets(tsmux::test::statmux_scenario(38e6, 8, 0.05, 3), 5.0);
    return packets;
}

void BM_Insert(benchmark::State& state)
{
    const auto& input = stream_38m();
    std::mt19937_64 rng(4);
    std::vector<std::uint8_t> bytes(500'000);
    for (auto& b : bytes)
        b = static_cast<std::uint8_t>(rng());
    tsmux::InsertionConfig config;
    config.program_number = 700;
    config.data_pid = tsmux::Pid(0x0700);
    config.pmt_pid = tsmux::Pid(0x0701);
    std::vector<tsmux::PacketBytes> output(input.size());
    for (auto _ : state) {
        tsmux::MemoryPayload payload(bytes);
        tsmux::Inserter inserter(config, payload);
        for (std::size_t i = 0; i < input.size(); ++i)
            inserter.process(input[i], output[i]);
        benchmark::DoNotOptimize(inserter.finish());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * input.size() * tsmux::kPacketSize));
}
BENCHMARK(BM_Insert)->Unit(benchmark::kMillisecond);

void BM_Analyze(benchmark::State& state)
{
    const auto& input = stream_38m();
    for (auto _ : state)
        benchmark::DoNotOptimize(tsmux::measure(input, tsmux::AnalyzerOptions{}));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * input.size() * tsmux::kPacketSize));
}
BENCHMARK(BM_Analyze)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state)
{
    const auto config = tsmux::test::statmux_scenario(38e6, 8, 0.05, 5);
    for (auto _ : state) {
        std::size_t count = 0;
        tsmux::generate_stream(config, 1.0, [&](const tsmux::PacketBytes&) { ++count; });
        benchmark::DoNotOptimize(count);
    }
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

void BM_Allocate(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> c(0.5, 6.0);
    std::vector<double> complexity(n), lo(n, 0.5e6), hi(n, 12e6);
    for (auto& x : complexity)
        x = c(rng);
    const double budget = 4e6 * static_cast<double>(n);
    for (auto _ : state)
        benchmark::DoNotOptimize(tsmux::allocate_equal_distortion(complexity, budget, lo, hi));
}
BENCHMARK(BM_Allocate)->Arg(6)->Arg(24)->Arg(96);

} // namespace
