#include "tsmux/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "tsmux/allocator.hpp"
#include "tsmux/section.hpp"
#include "tsmux/tables.hpp"

namespace tsmux {

namespace {

constexpr std::uint8_t kVideoStreamType = 0x02;
constexpr std::uint8_t kDigitalTelevisionService = 0x01;
constexpr std::size_t kPcrFieldBytes = 8; // length byte, flags byte, 6-byte PCR

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t slot_at(double seconds, double channel_rate) noexcept
{
    return static_cast<std::uint64_t>(std::ceil(seconds * channel_rate / static_cast<double>(kPacketBits) - 1e-9));
}

struct PsiTables {
    std::vector<std::pair<Section, Pid>> sections;
    std::size_t packets_per_repetition = 0;
};

PsiTables build_psi(const MuxConfig& config)
{
    PsiTables psi;
    Pat pat;
    pat.transport_stream_id = config.transport_stream_id;
    for (const auto& s : config.services)
        pat.programs.push_back({s.encoder.service_id, s.pmt_pid});
    psi.sections.emplace_back(serialize_pat(pat), kPatPid);

    for (const auto& s : config.services) {
        Pmt pmt;
        pmt.program_number = s.encoder.service_id;
        pmt.pcr_pid = s.encoder.pid;
        pmt.streams.push_back({kVideoStreamType, s.encoder.pid, {}});
        psi.sections.emplace_back(serialize_pmt(pmt), s.pmt_pid);
    }

    const bool any_name = std::any_of(config.services.begin(), config.services.end(),
                                      [](const ServiceConfig& s) { return !s.name.empty(); });
    if (any_name) {
        Sdt sdt;
        sdt.transport_stream_id = config.transport_stream_id;
        sdt.original_network_id = 1;
        for (const auto& s : config.services)
            sdt.services.push_back({s.encoder.service_id, kDigitalTelevisionService, "tsmux", s.name});
        psi.sections.emplace_back(serialize_sdt(sdt), kSdtPid);
    }

    for (const auto& [section, pid] : psi.sections)
        psi.packets_per_repetition += sectionize(section, pid, 0).size();
    return psi;
}

void fill_random(std::mt19937_64& rng, std::uint8_t* out, std::size_t n)
{
    while (n >= 8) {
        const std::uint64_t v = rng();
        for (int b = 0; b < 8; ++b)
            out[b] = static_cast<std::uint8_t>(v >> (8 * b));
        out += 8;
        n -= 8;
    }
    if (n > 0) {
        const std::uint64_t v = rng();
        for (std::size_t b = 0; b < n; ++b)
            out[b] = static_cast<std::uint8_t>(v >> (8 * b));
    }
}

void write_service_packet(PacketBytes& out, Pid pid, std::uint8_t cc, const std::optional<std::uint64_t>& pcr_ticks,
                          std::mt19937_64& rng)
{
    out[0] = kSyncByte;
    out[1] = static_cast<std::uint8_t>((pid.value() >> 8) & 0x1F);
    out[2] = static_cast<std::uint8_t>(pid.value() & 0xFF);
    std::size_t pos = 4;
    if (pcr_ticks) {
        const Pcr pcr = Pcr::from_ticks(*pcr_ticks);
        out[3] = static_cast<std::uint8_t>(0x30 | (cc & 0x0F));
        out[4] = kPcrFieldBytes - 1;
        out[5] = 0x10;
        out[6] = static_cast<std::uint8_t>(pcr.base >> 25);
        out[7] = static_cast<std::uint8_t>(pcr.base >> 17);
        out[8] = static_cast<std::uint8_t>(pcr.base >> 9);
        out[9] = static_cast<std::uint8_t>(pcr.base >> 1);
        out[10] = static_cast<std::uint8_t>(((pcr.base & 1) << 7) | 0x7E | ((pcr.extension >> 8) & 1));
        out[11] = static_cast<std::uint8_t>(pcr.extension & 0xFF);
        pos += kPcrFieldBytes;
    } else {
        out[3] = static_cast<std::uint8_t>(0x10 | (cc & 0x0F));
    }
    fill_random(rng, out.data() + pos, kPacketSize - pos);
}

} // namespace

void validate(const MuxConfig& config)
{
    if (!(config.channel_rate > 0.0) || !(config.gop_duration > 0.0) || !(config.psi_interval > 0.0)
        || !(config.pcr_interval > 0.0) || config.null_reserve_rate < 0.0)
        throw Error(ErrorCode::InvalidArgument, "channel rate, GOP duration, PSI and PCR intervals must be positive");

    std::set<std::uint16_t> pids{kPatPid.value(), kSdtPid.value(), kNullPid.value()};
    std::set<std::uint16_t> service_ids;
    double committed = psi_rate(config) + config.null_reserve_rate;
    for (const auto& s : config.services) {
        validate(s.encoder);
        if (s.encoder.service_id == 0 || !service_ids.insert(s.encoder.service_id).second)
            throw Error(ErrorCode::InvalidArgument, "service ids must be non-zero and distinct");
        if (!pids.insert(s.encoder.pid.value()).second || !pids.insert(s.pmt_pid.value()).second)
            throw Error(ErrorCode::InvalidArgument, "service " + std::to_string(s.encoder.service_id)
                                                        + " reuses a PID (or one of 0x0000, 0x0011, 0x1FFF)");
        committed += s.encoder.mode == RateMode::Cbr ? s.encoder.max_rate : s.encoder.min_rate;
    }
    if (committed >= config.channel_rate)
        throw Error(ErrorCode::Infeasible, "PSI, reserve and minimum service rates exceed the channel rate");
}

std::size_t psi_packets_per_repetition(const MuxConfig& config)
{
    return build_psi(config).packets_per_repetition;
}

double psi_rate(const MuxConfig& config)
{
    return static_cast<double>(psi_packets_per_repetition(config) * kPacketBits) / config.psi_interval;
}

double GenerationSummary::mean_rate(std::size_t index) const
{
    double weighted = 0.0;
    double slots = 0.0;
    for (const auto& g : gops) {
        weighted += g.rates.at(index) * static_cast<double>(g.slots);
        slots += static_cast<double>(g.slots);
    }
    return slots > 0.0 ? weighted / slots : 0.0;
}

GenerationSummary generate_stream(const MuxConfig& config, double duration_seconds, const PacketCallback& sink)
{
    validate(config);
    if (!(duration_seconds > 0.0))
        throw Error(ErrorCode::InvalidArgument, "duration must be positive");

    const double channel = config.channel_rate;
    const double gop = config.gop_duration;
    const auto total_packets = static_cast<std::uint64_t>(std::floor(channel * duration_seconds / kPacketBits + 1e-9));
    const auto gop_count = static_cast<std::size_t>(std::ceil(duration_seconds / gop - 1e-9));
    const std::size_t n = config.services.size();

    std::vector<EncoderModel> models;
    std::vector<double> trace_means;
    for (std::size_t i = 0; i < n; ++i) {
        EncoderModel model = config.services[i].encoder;
        if (model.complexity_trace.empty())
            model.complexity_trace = gen_complexity(splitmix64(config.seed ^ (0x1000 + i)), gop_count, config.services[i].complexity);
        const double sum = std::accumulate(model.complexity_trace.begin(), model.complexity_trace.end(), 0.0);
        trace_means.push_back(sum / static_cast<double>(model.complexity_trace.size()));
        models.push_back(std::move(model));
    }

    std::vector<std::size_t> flexible;
    double cbr_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (models[i].mode == RateMode::Cbr)
            cbr_total += models[i].max_rate;
        else
            flexible.push_back(i);
    }

    const PsiTables psi = build_psi(config);
    std::vector<std::uint8_t> psi_cc(psi.sections.size(), 0);
    std::uint64_t psi_repetition = 0;
    std::uint64_t next_psi_slot = 0;

    std::vector<double> credit(n, 0.0);
    std::vector<std::uint8_t> cc(n, 0);
    std::vector<double> next_pcr(n, 0.0);
    std::mt19937_64 rng(splitmix64(config.seed));
    const PacketBytes null_bytes = serialize_packet(make_null_packet(0));

    GenerationSummary summary;
    summary.gops.reserve(gop_count);
    std::uint64_t index = 0;

    struct Slot {
        double key;
        int kind; // >= 0 service, -1 null, -2 PSI repetition
    };
    std::vector<Slot> schedule;

    for (std::size_t g = 0; g < gop_count; ++g) {
        const std::uint64_t start = std::min(total_packets, slot_at(static_cast<double>(g) * gop, channel));
        const std::uint64_t end = g + 1 == gop_count ? total_packets : std::min(total_packets, slot_at(static_cast<double>(g + 1) * gop, channel));
        if (end <= start)
            continue;
        const auto slots = static_cast<std::size_t>(end - start);

        std::vector<std::uint64_t> repetitions;
        while (next_psi_slot < end) {
            repetitions.push_back(std::max(next_psi_slot, start) - start);
            ++psi_repetition;
            next_psi_slot = slot_at(static_cast<double>(psi_repetition) * config.psi_interval, channel);
        }
        const std::size_t psi_packets = repetitions.size() * psi.packets_per_repetition;
        if (psi_packets > slots)
            throw Error(ErrorCode::Infeasible, "PSI repetitions do not fit the GOP");

        const double seconds = static_cast<double>(slots) * kPacketBits / channel;
        const std::size_t available = slots - psi_packets;
        const double capacity = static_cast<double>(available) * kPacketBits / seconds;
        const double budget = capacity - cbr_total - config.null_reserve_rate;

        std::vector<std::optional<double>> allocation(n);
        if (!flexible.empty()) {
            std::vector<double> c, lo, hi;
            for (auto i : flexible) {
                const auto& trace = models[i].complexity_trace;
                c.push_back(trace[g % trace.size()]);
                lo.push_back(models[i].min_rate);
                hi.push_back(models[i].max_rate);
            }
            const auto result = allocate_equal_distortion(c, budget, lo, hi);
            for (std::size_t k = 0; k < flexible.size(); ++k)
                allocation[flexible[k]] = result.rates[k];
        }

        GopRecord record;
        record.slots = slots;
        record.psi_packets = psi_packets;
        record.rates.resize(n);
        double flexible_total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& trace = models[i].complexity_trace;
            record.rates[i] = encoder_rate(models[i], g % trace.size(), allocation[i], trace_means[i]);
            if (models[i].mode != RateMode::Cbr)
                flexible_total += record.rates[i];
        }
        // Open-loop VBR encoders may overshoot; the multiplexer throttles them to what the channel holds.
        const double flexible_room = capacity - cbr_total;
        if (flexible_total > flexible_room && flexible_total > 0.0) {
            const double scale = flexible_room / flexible_total;
            for (auto i : flexible)
                record.rates[i] *= scale;
        }

        record.packets.assign(n, 0);
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            credit[i] += record.rates[i] * seconds;
            auto count = static_cast<std::size_t>(std::floor(credit[i] / kPacketBits));
            credit[i] -= static_cast<double>(count * kPacketBits);
            // Carried credit never lifts a GOP more than one packet above max_rate.
            const auto ceiling = static_cast<std::size_t>(std::ceil(models[i].max_rate * seconds / kPacketBits - 1e-9));
            if (count > ceiling) {
                count = ceiling;
                credit[i] = 0.0;
            }
            record.packets[i] = count;
            used += count;
        }
        while (used > available) {
            const auto it = std::max_element(record.packets.begin(), record.packets.end());
            const auto i = static_cast<std::size_t>(it - record.packets.begin());
            --record.packets[i];
            credit[i] += kPacketBits;
            --used;
        }
        record.null_packets = available - used;

        schedule.clear();
        for (auto local : repetitions)
            schedule.push_back({static_cast<double>(local) - 0.5, -2});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < record.packets[i]; ++k)
                schedule.push_back({(static_cast<double>(k) + 0.5) * static_cast<double>(slots) / static_cast<double>(record.packets[i]),
                                    static_cast<int>(i)});
        for (std::size_t k = 0; k < record.null_packets; ++k)
            schedule.push_back({(static_cast<double>(k) + 0.5) * static_cast<double>(slots) / static_cast<double>(record.null_packets), -1});
        std::stable_sort(schedule.begin(), schedule.end(), [](const Slot& a, const Slot& b) { return a.key < b.key; });

        PacketBytes packet;
        for (const auto& slot : schedule) {
            if (slot.kind == -2) {
                for (std::size_t s = 0; s < psi.sections.size(); ++s) {
                    const auto& [section, pid] = psi.sections[s];
                    for (const auto& p : sectionize_bytes(section, pid, psi_cc[s])) {
                        sink(p);
                        ++index;
                        psi_cc[s] = (psi_cc[s] + 1) & 0x0F;
                    }
                }
            } else if (slot.kind == -1) {
                sink(null_bytes);
                ++index;
            } else {
                const auto i = static_cast<std::size_t>(slot.kind);
                const double t = static_cast<double>(index) * kPacketBits / channel;
                std::optional<std::uint64_t> pcr;
                if (t + 1e-12 >= next_pcr[i]) {
                    pcr = static_cast<std::uint64_t>(std::llround(static_cast<long double>(index) * kPacketBits
                                                                  * Pcr::kTicksPerSecond / static_cast<long double>(channel)));
                    while (next_pcr[i] <= t + 1e-12)
                        next_pcr[i] += config.pcr_interval;
                }
                write_service_packet(packet, models[i].pid, cc[i], pcr, rng);
                cc[i] = (cc[i] + 1) & 0x0F;
                sink(packet);
                ++index;
            }
        }
        summary.gops.push_back(std::move(record));
    }
    summary.packets = index;
    return summary;
}

std::vector<PacketBytes> generate_packets(const MuxConfig& config, double duration_seconds, GenerationSummary* summary)
{
    std::vector<PacketBytes> packets;
    auto result = generate_stream(config, duration_seconds, [&](const PacketBytes& p) { packets.push_back(p); });
    if (summary)
        *summary = std::move(result);
    return packets;
}

} // namespace tsmux
