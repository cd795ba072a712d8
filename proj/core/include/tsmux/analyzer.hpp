#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsmux/packet.hpp"
#include "tsmux/section.hpp"
#include "tsmux/tables.hpp"

namespace tsmux {

/// Where packet timestamps come from.
struct ClockSource {
    enum class Mode { PcrDerived, NominalRate };

    Mode mode = Mode::PcrDerived;
    /// PcrDerived only; unset means the first PID observed carrying a PCR.
    std::optional<Pid> reference_pid;
    /// NominalRate only.
    std::int64_t bits_per_second = 0;

    static ClockSource pcr(std::optional<Pid> reference = std::nullopt)
    {
        return ClockSource{Mode::PcrDerived, reference, 0};
    }
    static ClockSource nominal(std::int64_t bits_per_second)
    {
        return ClockSource{Mode::NominalRate, std::nullopt, bits_per_second};
    }
};

struct AnalyzerOptions {
    ClockSource clock;
    double window_seconds = 0.5;
    /// Replace each series by its cumulative running mean.
    bool averaging = false;
    /// Coefficient-of-variation threshold separating static from statistical multiplexing.
    double statmux_threshold = 0.10;
};

struct WindowRate {
    std::size_t window_index = 0;
    double bits_per_second = 0.0;

    bool operator==(const WindowRate&) const = default;
};

struct PidStats {
    Pid pid;
    std::uint64_t packet_count = 0;
    std::uint64_t byte_count = 0;
    std::vector<WindowRate> series;
    double min_bitrate = 0.0;
    double max_bitrate = 0.0;
    double mean_bitrate = 0.0;

    bool operator==(const PidStats&) const = default;
};

struct ProgramStats {
    std::uint16_t program_number = 0;
    Pid pmt_pid;
    std::string name;
    /// PMT PID followed by the elementary PIDs of the latest PMT.
    std::vector<Pid> pids;
    /// Elementary stream with the largest byte count.
    std::optional<Pid> video_pid;
    std::vector<WindowRate> series;
    double min_bitrate = 0.0;
    double max_bitrate = 0.0;
    double mean_bitrate = 0.0;

    bool operator==(const ProgramStats&) const = default;
};

enum class MuxVerdict { Static, Statistical, Unknown };

std::string_view to_string(MuxVerdict verdict) noexcept;

struct MuxReport {
    double total_bitrate = 0.0;
    double duration = 0.0;
    double window_length = 0.0;
    bool averaging = false;
    std::uint64_t total_packets = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t null_packets = 0;
    double null_fraction = 0.0;
    std::size_t window_count = 0;
    std::optional<Pid> clock_pid;
    std::vector<PidStats> pids;         // ascending PID order
    std::vector<ProgramStats> programs; // PAT order
    MuxVerdict verdict = MuxVerdict::Unknown;

    const PidStats* find_pid(Pid pid) const noexcept;
    const ProgramStats* find_program(std::uint16_t program_number) const noexcept;
    /// Program owning `pid` (first match in PAT order), if any.
    const ProgramStats* program_of(Pid pid) const noexcept;

    bool operator==(const MuxReport&) const = default;
};

/// Single-pass, bounded-memory measurement. Packets are buffered only between
/// consecutive PCRs of the reference PID so that they can be time-stamped by
/// interpolation.
class MuxAnalyzer {
public:
    explicit MuxAnalyzer(AnalyzerOptions options);
    ~MuxAnalyzer();
    MuxAnalyzer(MuxAnalyzer&&) noexcept;
    MuxAnalyzer& operator=(MuxAnalyzer&&) noexcept;

    void push(const PacketBytes& packet);
    /// Throws EmptyStream, or NoPcr when the reference PID carries fewer than two PCRs.
    MuxReport finish();

private:
    struct State;
    std::unique_ptr<State> state_;
};

MuxReport measure(std::span<const PacketBytes> stream, const AnalyzerOptions& options);

/// Fraction of packets on the null PID. Throws EmptyStream.
double null_fraction(std::span<const PacketBytes> stream);

/// Coefficient of variation of each program's video PID over real-time windows:
/// Statistical when at least two exceed `threshold`, Static when none does,
/// Unknown for averaged reports, fewer than 10 windows or fewer than 2 programs.
MuxVerdict classify_multiplexing(const MuxReport& report, double threshold = 0.10);

/// Population coefficient of variation (stddev / mean); 0 for empty or zero-mean input.
double coefficient_of_variation(std::span<const WindowRate> series) noexcept;

struct ServiceRef {
    std::string label;
    Pid pid;
};

struct CapacityRow {
    std::string label;
    Pid pid;
    double max_bitrate = 0.0;
    double min_bitrate = 0.0;
};

struct CapacitySummary {
    std::vector<CapacityRow> rows;
    double total_max = 0.0;
    double total_min = 0.0;
    double capacity = 0.0;
    /// capacity - total_max (negative when peaks cannot coexist).
    double difference_at_max = 0.0;
    /// capacity - total_min.
    double difference_at_min = 0.0;
};

CapacitySummary capacity_summary(const MuxReport& report, std::span<const ServiceRef> services, double capacity_bps);

/// Each program's video PID, labelled with its SDT name when known.
std::vector<ServiceRef> video_services(const MuxReport& report);

} // namespace tsmux
