#include "tsmux/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tsmux {

namespace {

constexpr std::size_t kPidSpace = 0x2000;
constexpr double kTicksPerSecond = static_cast<double>(Pcr::kTicksPerSecond);
/// PCR steps outside (0, 5 s] are treated as discontinuities.
constexpr double kMaxPcrStepTicks = 5.0 * kTicksPerSecond;
constexpr std::size_t kMinClassifiableWindows = 10;

std::size_t window_of(double seconds, double window) noexcept
{
    if (seconds <= 0.0)
        return 0;
    return static_cast<std::size_t>(std::floor(seconds / window + 1e-9));
}

void summarize(const std::vector<WindowRate>& series, double& min, double& max, double& mean)
{
    if (series.empty()) {
        min = max = mean = 0.0;
        return;
    }
    min = series.front().bits_per_second;
    max = min;
    double sum = 0.0;
    for (const auto& w : series) {
        min = std::min(min, w.bits_per_second);
        max = std::max(max, w.bits_per_second);
        sum += w.bits_per_second;
    }
    mean = std::clamp(sum / static_cast<double>(series.size()), min, max);
}

/// Cumulative running mean, updated incrementally so constant series stay exact.
void to_running_mean(std::vector<WindowRate>& series)
{
    double mean = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        mean += (series[i].bits_per_second - mean) / static_cast<double>(i + 1);
        series[i].bits_per_second = mean;
    }
}

} // namespace

std::string_view to_string(MuxVerdict verdict) noexcept
{
    switch (verdict) {
    case MuxVerdict::Static: return "static";
    case MuxVerdict::Statistical: return "statistical";
    case MuxVerdict::Unknown: return "unknown";
    }
    return "unknown";
}

const PidStats* MuxReport::find_pid(Pid pid) const noexcept
{
    auto it = std::lower_bound(pids.begin(), pids.end(), pid, [](const PidStats& s, Pid p) { return s.pid < p; });
    return it != pids.end() && it->pid == pid ? &*it : nullptr;
}

const ProgramStats* MuxReport::find_program(std::uint16_t program_number) const noexcept
{
    for (const auto& p : programs)
        if (p.program_number == program_number)
            return &p;
    return nullptr;
}

const ProgramStats* MuxReport::program_of(Pid pid) const noexcept
{
    for (const auto& p : programs)
        if (std::find(p.pids.begin(), p.pids.end(), pid) != p.pids.end())
            return &p;
    return nullptr;
}

struct MuxAnalyzer::State {
    struct Anchor {
        std::uint64_t index = 0;
        double ticks = 0.0;
        std::uint64_t raw = 0;
    };

    explicit State(AnalyzerOptions o) : options(std::move(o)), window_bytes(kPidSpace)
    {
        if (!(options.window_seconds > 0.0))
            throw Error(ErrorCode::InvalidArgument, "window length must be positive");
        if (options.clock.mode == ClockSource::Mode::NominalRate && options.clock.bits_per_second <= 0)
            throw Error(ErrorCode::InvalidArgument, "nominal rate must be positive");
        reference = options.clock.reference_pid;
        window_ticks = options.window_seconds * kTicksPerSecond;
    }

    AnalyzerOptions options;
    std::uint64_t index = 0;
    std::array<std::uint64_t, kPidSpace> packets{};
    std::vector<std::vector<std::uint64_t>> window_bytes;

    SectionAssembler pat_assembler;
    SectionAssembler sdt_assembler;
    std::map<std::uint16_t, SectionAssembler> pmt_assemblers;
    std::optional<Pat> pat;
    std::map<std::uint16_t, Pmt> pmts;
    std::map<std::uint16_t, std::string> names;

    std::optional<Pid> reference;
    std::optional<Anchor> last;
    bool have_rate = false;
    double ticks_per_packet = 0.0;
    double origin_ticks = 0.0;
    std::vector<std::uint16_t> pending;
    std::uint64_t pending_start = 0;
    double window_ticks = 0.0;

    void count(std::uint16_t pid, std::size_t window)
    {
        auto& bins = window_bytes[pid];
        if (bins.size() <= window)
            bins.resize(window + 1, 0);
        bins[window] += kPacketSize;
    }

    void assign_pending(std::uint64_t until)
    {
        for (std::uint64_t k = pending_start; k < until; ++k) {
            const double t = last->ticks + (static_cast<double>(k) - static_cast<double>(last->index)) * ticks_per_packet;
            const double rel = std::max(0.0, t - origin_ticks);
            count(pending[k - pending_start], static_cast<std::size_t>(std::floor(rel / window_ticks + 1e-9)));
        }
        pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(until - pending_start));
        pending_start = until;
    }

    void on_pcr(std::uint64_t i, std::uint64_t raw)
    {
        if (!last) {
            last = Anchor{i, static_cast<double>(raw), raw};
            return;
        }
        const std::uint64_t gap = i - last->index;
        if (gap == 0)
            return;
        const auto delta = static_cast<double>(pcr_delta(last->raw, raw));
        double t = 0.0;
        if (delta <= 0.0 || delta > kMaxPcrStepTicks) {
            if (!have_rate) {
                // Restart before any timing was established; earlier packets are extrapolated later.
                last = Anchor{i, static_cast<double>(raw), raw};
                return;
            }
            t = last->ticks + static_cast<double>(gap) * ticks_per_packet;
        } else {
            t = last->ticks + delta;
        }
        ticks_per_packet = (t - last->ticks) / static_cast<double>(gap);
        if (!have_rate) {
            origin_ticks = last->ticks - static_cast<double>(last->index) * ticks_per_packet;
            have_rate = true;
        }
        assign_pending(i);
        last = Anchor{i, t, raw};
    }

    void track_psi(const PacketView& v)
    {
        const auto pid = v.pid_value();
        std::vector<Section> sections;
        if (pid == kPatPid.value()) {
            pat_assembler.push(v, sections);
            for (const auto& s : sections) {
                if (s.table_id != kPatTableId || !s.current_next)
                    continue;
                try {
                    auto parsed = parse_pat(s);
                    if (s.section_number == 0 || !pat)
                        pat = std::move(parsed);
                    else
                        pat->programs.insert(pat->programs.end(), parsed.programs.begin(), parsed.programs.end());
                    for (const auto& e : pat->programs)
                        if (e.program_number != 0)
                            pmt_assemblers.try_emplace(e.pid.value());
                } catch (const Error&) {
                }
            }
        } else if (pid == kSdtPid.value()) {
            sdt_assembler.push(v, sections);
            for (const auto& s : sections) {
                if (s.table_id != kSdtActualTableId)
                    continue;
                try {
                    for (const auto& service : parse_sdt(s).services)
                        if (!service.name.empty())
                            names[service.service_id] = service.name;
                } catch (const Error&) {
                }
            }
        } else if (auto it = pmt_assemblers.find(pid); it != pmt_assemblers.end()) {
            it->second.push(v, sections);
            for (const auto& s : sections) {
                if (s.table_id != kPmtTableId || !s.current_next)
                    continue;
                try {
                    auto pmt = parse_pmt(s);
                    pmts[pmt.program_number] = std::move(pmt);
                } catch (const Error&) {
                }
            }
        }
    }

    void push(const PacketBytes& bytes)
    {
        const PacketView v(bytes);
        const auto pid = v.pid_value();
        ++packets[pid];
        track_psi(v);

        if (options.clock.mode == ClockSource::Mode::NominalRate) {
            const double t = static_cast<double>(index) * kPacketBits / static_cast<double>(options.clock.bits_per_second);
            count(pid, window_of(t, options.window_seconds));
        } else {
            pending.push_back(pid);
            std::optional<Pcr> pcr;
            if (!reference && (pcr = v.pcr()))
                reference = v.pid();
            if (reference && reference->value() == pid) {
                if (!pcr)
                    pcr = v.pcr();
                if (pcr)
                    on_pcr(index, pcr->ticks());
            }
        }
        ++index;
    }

    MuxReport finish()
    {
        if (index == 0)
            throw Error(ErrorCode::EmptyStream, "empty stream");

        double duration = 0.0;
        if (options.clock.mode == ClockSource::Mode::NominalRate) {
            duration = static_cast<double>(index) * kPacketBits / static_cast<double>(options.clock.bits_per_second);
        } else {
            if (!have_rate)
                throw Error(ErrorCode::NoPcr, reference ? "reference PID " + std::to_string(reference->value()) + " carries fewer than two PCRs"
                                                        : std::string("no PID carries a PCR"));
            assign_pending(index);
            const double end = last->ticks + static_cast<double>(index - last->index) * ticks_per_packet;
            duration = (end - origin_ticks) / kTicksPerSecond;
        }

        MuxReport report;
        report.duration = duration;
        report.window_length = options.window_seconds;
        report.averaging = false;
        report.total_packets = index;
        report.total_bytes = index * kPacketSize;
        report.null_packets = packets[kNullPid.value()];
        report.null_fraction = static_cast<double>(report.null_packets) / static_cast<double>(index);
        report.total_bitrate = static_cast<double>(report.total_bytes) * 8.0 / duration;
        if (options.clock.mode == ClockSource::Mode::PcrDerived)
            report.clock_pid = reference;

        // A window short by less than one packet time still counts as full.
        const double packet_seconds = duration / static_cast<double>(index);
        std::size_t windows = static_cast<std::size_t>(std::floor((duration + packet_seconds) / options.window_seconds - 1e-9));
        double effective_window = options.window_seconds;
        if (windows == 0) {
            // Shorter than one window: report the single partial window at its true length.
            windows = 1;
            effective_window = duration;
        }
        report.window_count = windows;

        for (std::size_t pid = 0; pid < kPidSpace; ++pid) {
            if (packets[pid] == 0)
                continue;
            PidStats stats;
            stats.pid = Pid{static_cast<std::uint16_t>(pid)};
            stats.packet_count = packets[pid];
            stats.byte_count = packets[pid] * kPacketSize;
            const auto& bins = window_bytes[pid];
            stats.series.reserve(windows);
            for (std::size_t w = 0; w < windows; ++w) {
                const double bytes = w < bins.size() ? static_cast<double>(bins[w]) : 0.0;
                stats.series.push_back({w, bytes * 8.0 / effective_window});
            }
            summarize(stats.series, stats.min_bitrate, stats.max_bitrate, stats.mean_bitrate);
            report.pids.push_back(std::move(stats));
        }

        if (pat) {
            for (const auto& entry : pat->programs) {
                if (entry.program_number == 0)
                    continue;
                ProgramStats program;
                program.program_number = entry.program_number;
                program.pmt_pid = entry.pid;
                if (auto n = names.find(entry.program_number); n != names.end())
                    program.name = n->second;
                program.pids.push_back(entry.pid);
                std::uint64_t best = 0;
                if (auto pmt = pmts.find(entry.program_number); pmt != pmts.end()) {
                    for (const auto& es : pmt->second.streams) {
                        if (std::find(program.pids.begin(), program.pids.end(), es.elementary_pid) == program.pids.end())
                            program.pids.push_back(es.elementary_pid);
                        const auto bytes = packets[es.elementary_pid.value()];
                        if (!program.video_pid || bytes > best) {
                            best = bytes;
                            program.video_pid = es.elementary_pid;
                        }
                    }
                }
                program.series.resize(windows);
                for (std::size_t w = 0; w < windows; ++w)
                    program.series[w].window_index = w;
                for (const auto pid : program.pids)
                    if (const auto* stats = report.find_pid(pid))
                        for (std::size_t w = 0; w < windows; ++w)
                            program.series[w].bits_per_second += stats->series[w].bits_per_second;
                summarize(program.series, program.min_bitrate, program.max_bitrate, program.mean_bitrate);
                report.programs.push_back(std::move(program));
            }
        }

        report.verdict = classify_multiplexing(report, options.statmux_threshold);

        if (options.averaging) {
            report.averaging = true;
            for (auto& s : report.pids) {
                to_running_mean(s.series);
                summarize(s.series, s.min_bitrate, s.max_bitrate, s.mean_bitrate);
            }
            for (auto& p : report.programs) {
                to_running_mean(p.series);
                summarize(p.series, p.min_bitrate, p.max_bitrate, p.mean_bitrate);
            }
        }
        return report;
    }
};

MuxAnalyzer::MuxAnalyzer(AnalyzerOptions options) : state_(std::make_unique<State>(std::move(options))) {}
MuxAnalyzer::~MuxAnalyzer() = default;
MuxAnalyzer::MuxAnalyzer(MuxAnalyzer&&) noexcept = default;
MuxAnalyzer& MuxAnalyzer::operator=(MuxAnalyzer&&) noexcept = default;

void MuxAnalyzer::push(const PacketBytes& packet)
{
    state_->push(packet);
}

MuxReport MuxAnalyzer::finish()
{
    return state_->finish();
}

MuxReport measure(std::span<const PacketBytes> stream, const AnalyzerOptions& options)
{
    MuxAnalyzer analyzer(options);
    for (const auto& p : stream)
        analyzer.push(p);
    return analyzer.finish();
}

double null_fraction(std::span<const PacketBytes> stream)
{
    if (stream.empty())
        throw Error(ErrorCode::EmptyStream, "empty stream");
    const auto nulls = std::count_if(stream.begin(), stream.end(), [](const PacketBytes& p) { return PacketView(p).is_null(); });
    return static_cast<double>(nulls) / static_cast<double>(stream.size());
}

double coefficient_of_variation(std::span<const WindowRate> series) noexcept
{
    if (series.empty())
        return 0.0;
    double mean = 0.0;
    for (const auto& w : series)
        mean += w.bits_per_second;
    mean /= static_cast<double>(series.size());
    if (mean <= 0.0)
        return 0.0;
    double var = 0.0;
    for (const auto& w : series)
        var += (w.bits_per_second - mean) * (w.bits_per_second - mean);
    var /= static_cast<double>(series.size());
    return std::sqrt(var) / mean;
}

MuxVerdict classify_multiplexing(const MuxReport& report, double threshold)
{
    if (report.averaging || report.window_count < kMinClassifiableWindows)
        return MuxVerdict::Unknown;
    std::size_t candidates = 0;
    std::size_t variable = 0;
    for (const auto& program : report.programs) {
        if (!program.video_pid)
            continue;
        const auto* stats = report.find_pid(*program.video_pid);
        if (!stats)
            continue;
        ++candidates;
        if (coefficient_of_variation(stats->series) > threshold)
            ++variable;
    }
    if (candidates < 2)
        return MuxVerdict::Unknown;
    if (variable >= 2)
        return MuxVerdict::Statistical;
    if (variable == 0)
        return MuxVerdict::Static;
    return MuxVerdict::Unknown;
}

CapacitySummary capacity_summary(const MuxReport& report, std::span<const ServiceRef> services, double capacity_bps)
{
    CapacitySummary summary;
    summary.capacity = capacity_bps;
    for (const auto& service : services) {
        const auto* stats = report.find_pid(service.pid);
        if (!stats || stats->series.empty())
            throw Error(ErrorCode::InvalidArgument, "service PID " + std::to_string(service.pid.value()) + " has no windowed data");
        summary.rows.push_back({service.label, service.pid, stats->max_bitrate, stats->min_bitrate});
        summary.total_max += stats->max_bitrate;
        summary.total_min += stats->min_bitrate;
    }
    summary.difference_at_max = capacity_bps - summary.total_max;
    summary.difference_at_min = capacity_bps - summary.total_min;
    return summary;
}

std::vector<ServiceRef> video_services(const MuxReport& report)
{
    std::vector<ServiceRef> services;
    for (const auto& program : report.programs) {
        if (!program.video_pid || !report.find_pid(*program.video_pid))
            continue;
        services.push_back({program.name.empty() ? "program " + std::to_string(program.program_number) : program.name,
                            *program.video_pid});
    }
    return services;
}

} // namespace tsmux
