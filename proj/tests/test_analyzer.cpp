#include <cmath>
#include <numeric>

#include "doctest.h"
#include "support.hpp"
#include "tsmux/analyzer.hpp"
#include "tsmux/report_export.hpp"

using namespace tsmux;

namespace {

constexpr double kTicksPerPacket = 27'000.0; // 1000 packets/s, 1.504 Mbit/s

/// Ten-packet cycle: three on 0x100 (PCR every 40 packets), one on 0x200, six nulls.
std::vector<PacketBytes> cycle_stream(std::size_t count, std::uint64_t start_ticks = 0)
{
    std::vector<PacketBytes> out;
    const std::vector<std::uint8_t> body(176, 0x11);
    std::uint8_t cc_a = 0, cc_b = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t slot = i % 10;
        if (slot < 3) {
            std::optional<Pcr> pcr;
            if (i % 40 == 0)
                pcr = Pcr::from_ticks((start_ticks + static_cast<std::uint64_t>(i * kTicksPerPacket)) % Pcr::kWrapTicks);
            out.push_back(serialize_packet(make_payload_packet(Pid(0x100), cc_a++ & 0x0F, false, body, pcr)));
        } else if (slot == 3) {
            out.push_back(serialize_packet(make_payload_packet(Pid(0x200), cc_b++ & 0x0F, false, body)));
        } else {
            out.push_back(serialize_packet(make_null_packet()));
        }
    }
    return out;
}

AnalyzerOptions pcr_options()
{
    AnalyzerOptions o;
    o.clock = ClockSource::pcr();
    return o;
}

} // namespace

TEST_CASE("per-PID rates of a hand-built stream")
{
    const auto stream = cycle_stream(5000);
    const auto report = measure(stream, pcr_options());
    CHECK(report.total_packets == 5000);
    CHECK(report.duration == doctest::Approx(5.0));
    CHECK(report.total_bitrate == doctest::Approx(1'504'000.0));
    CHECK(report.null_fraction == doctest::Approx(0.6));
    CHECK(report.window_count == 10);
    REQUIRE(report.clock_pid.has_value());
    CHECK(report.clock_pid->value() == 0x100);

    const auto* a = report.find_pid(Pid(0x100));
    REQUIRE(a != nullptr);
    CHECK(a->packet_count == 1500);
    REQUIRE(a->series.size() == 10);
    for (const auto& w : a->series)
        CHECK(w.bits_per_second == doctest::Approx(300.0 * 1504.0));
    const auto* b = report.find_pid(Pid(0x200));
    CHECK(b->mean_bitrate == doctest::Approx(100.0 * 1504.0));
    const auto* n = report.find_pid(kNullPid);
    CHECK(n->min_bitrate == doctest::Approx(600.0 * 1504.0));

    // Per-PID rates add up to the total in every window.
    for (std::size_t w = 0; w < report.window_count; ++w) {
        double sum = 0.0;
        for (const auto& p : report.pids)
            sum += p.series[w].bits_per_second;
        CHECK(sum == doctest::Approx(report.total_bitrate));
    }
}

TEST_CASE("trailing partial window is dropped")
{
    const auto report = measure(cycle_stream(5250), pcr_options());
    CHECK(report.window_count == 10);
    CHECK(report.duration == doctest::Approx(5.25));
}

TEST_CASE("a stream shorter than one window reports that window at its true length")
{
    const auto report = measure(cycle_stream(200), pcr_options());
    CHECK(report.window_count == 1);
    CHECK(report.find_pid(Pid(0x100))->series[0].bits_per_second == doctest::Approx(300.0 * 1504.0));
}

TEST_CASE("PCR wrap-around does not disturb timing")
{
    const std::uint64_t start = Pcr::kWrapTicks - 2 * 27'000'000ull;
    const auto report = measure(cycle_stream(5000, start), pcr_options());
    CHECK(report.duration == doctest::Approx(5.0));
    CHECK(report.total_bitrate == doctest::Approx(1'504'000.0));
}

TEST_CASE("nominal clock ignores PCRs")
{
    AnalyzerOptions o;
    o.clock = ClockSource::nominal(3'008'000);
    const auto report = measure(cycle_stream(5000), o);
    CHECK(report.duration == doctest::Approx(2.5));
    CHECK(report.total_bitrate == doctest::Approx(3'008'000.0));
    CHECK(report.window_count == 5);
    CHECK_FALSE(report.clock_pid.has_value());
}

TEST_CASE("explicit reference PID without PCRs raises NoPcr")
{
    AnalyzerOptions o;
    o.clock = ClockSource::pcr(Pid(0x200));
    try {
        measure(cycle_stream(1000), o);
        FAIL("expected NoPcr");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoPcr);
    }
}

TEST_CASE("empty stream")
{
    try {
        measure({}, pcr_options());
        FAIL("expected EmptyStream");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyStream);
    }
    CHECK_THROWS_AS(null_fraction({}), Error);
}

TEST_CASE("averaging turns series into running means")
{
    MuxConfig config = test::statmux_scenario(8e6, 3, 0.1, 5);
    const auto stream = generate_packets(config, 6.0);
    auto options = pcr_options();
    const auto raw = measure(stream, options);
    options.averaging = true;
    const auto averaged = measure(stream, options);
    CHECK(averaged.averaging);
    CHECK(averaged.verdict == raw.verdict);
    for (const auto& p : raw.pids) {
        const auto* q = averaged.find_pid(p.pid);
        REQUIRE(q != nullptr);
        double sum = 0.0;
        for (std::size_t w = 0; w < p.series.size(); ++w) {
            sum += p.series[w].bits_per_second;
            CHECK(q->series[w].bits_per_second == doctest::Approx(sum / static_cast<double>(w + 1)));
        }
    }
    // A constant series stays exactly constant under averaging.
    const auto constant = measure(cycle_stream(5000), [] {
        auto o = pcr_options();
        o.averaging = true;
        return o;
    }());
    for (const auto& w : constant.find_pid(Pid(0x100))->series)
        CHECK(w.bits_per_second == 300.0 * 1504.0);
}

TEST_CASE("programs, names and video PIDs come from PSI")
{
    MuxConfig config = test::statmux_scenario(10e6, 3, 0.05, 2);
    const auto report = measure(generate_packets(config, 3.0), pcr_options());
    REQUIRE(report.programs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& program = report.programs[i];
        CHECK(program.program_number == i + 1);
        CHECK(program.name == "svc" + std::to_string(i + 1));
        CHECK(program.pmt_pid == config.services[i].pmt_pid);
        REQUIRE(program.video_pid.has_value());
        CHECK(*program.video_pid == config.services[i].encoder.pid);
        CHECK(report.program_of(config.services[i].encoder.pid) == &program);
    }
}

TEST_CASE("coefficient of variation")
{
    const std::vector<WindowRate> flat = {{0, 5}, {1, 5}, {2, 5}};
    CHECK(coefficient_of_variation(flat) == 0.0);
    const std::vector<WindowRate> two = {{0, 1}, {1, 3}};
    CHECK(coefficient_of_variation(two) == doctest::Approx(0.5));
    CHECK(coefficient_of_variation({}) == 0.0);
}

TEST_CASE("classification of CBR and closed-loop multiplexes")
{
    MuxConfig cbr;
    cbr.channel_rate = 20e6;
    for (std::uint16_t i = 1; i <= 4; ++i)
        cbr.services.push_back(test::make_service(i, RateMode::Cbr, 4e6, 4e6, profile_params(ComplexityProfile::Sports)));
    const auto static_report = measure(generate_packets(cbr, 6.0), pcr_options());
    CHECK(static_report.verdict == MuxVerdict::Static);

    const auto statmux_report = measure(generate_packets(test::statmux_scenario(20e6, 4, 0.03, 9), 6.0), pcr_options());
    CHECK(statmux_report.verdict == MuxVerdict::Statistical);

    const auto short_report = measure(generate_packets(cbr, 2.0), pcr_options());
    CHECK(short_report.verdict == MuxVerdict::Unknown);
}

TEST_CASE("capacity summary arithmetic")
{
    const auto report = measure(cycle_stream(5000), pcr_options());
    const std::vector<ServiceRef> services = {{"A", Pid(0x100)}, {"B", Pid(0x200)}};
    const auto summary = capacity_summary(report, services, 1'000'000.0);
    REQUIRE(summary.rows.size() == 2);
    CHECK(summary.total_max == doctest::Approx(400.0 * 1504.0));
    CHECK(summary.total_min == doctest::Approx(400.0 * 1504.0));
    CHECK(summary.difference_at_max == doctest::Approx(1'000'000.0 - 400.0 * 1504.0));
    const std::vector<ServiceRef> unknown = {{"X", Pid(0x300)}};
    CHECK_THROWS_AS(capacity_summary(report, unknown, 1e6), Error);
}

TEST_CASE("analyzer state is independent of how packets are fed")
{
    const auto stream = cycle_stream(3000);
    MuxAnalyzer analyzer(pcr_options());
    for (const auto& p : stream)
        analyzer.push(p);
    CHECK(analyzer.finish() == measure(stream, pcr_options()));
}
