#include "tsmux/inserter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "tsmux/datachunk.hpp"
#include "tsmux/section.hpp"
#include "tsmux/stream_io.hpp"
#include "tsmux/tables.hpp"

namespace tsmux {

namespace {

constexpr std::uint8_t kPrivateDataStreamType = 0x06;
constexpr std::int64_t kMaxPcrStep = 5 * static_cast<std::int64_t>(Pcr::kTicksPerSecond);

/// Wall-clock position of each packet, from the PCR-measured stream rate
/// once available and from the nominal rate before that.
class StreamClock {
public:
    explicit StreamClock(double nominal_rate) : rate_(nominal_rate) {}

    void observe(const PacketView& packet, std::uint64_t index)
    {
        if (!packet.has_adaptation())
            return;
        if (reference_ && packet.pid_value() != *reference_)
            return;
        const auto pcr = packet.pcr();
        if (!pcr)
            return;
        const std::uint64_t ticks = pcr->ticks();
        if (!reference_) {
            reference_ = packet.pid_value();
        } else {
            const std::int64_t step = pcr_delta(last_ticks_, ticks);
            if (step > 0 && step <= kMaxPcrStep) {
                elapsed_ticks_ += static_cast<std::uint64_t>(step);
                elapsed_packets_ += index - last_index_;
                rate_ = static_cast<double>(elapsed_packets_) * kPacketBits * static_cast<double>(Pcr::kTicksPerSecond)
                    / static_cast<double>(elapsed_ticks_);
            }
        }
        last_ticks_ = ticks;
        last_index_ = index;
    }

    double rate() const noexcept { return rate_; }
    double seconds_at(std::uint64_t index) const noexcept { return static_cast<double>(index) * kPacketBits / rate_; }

private:
    double rate_;
    std::optional<std::uint16_t> reference_;
    std::uint64_t last_ticks_ = 0;
    std::uint64_t last_index_ = 0;
    std::uint64_t elapsed_ticks_ = 0;
    std::uint64_t elapsed_packets_ = 0;
};

[[noreturn]] void conflict(const std::string& what)
{
    throw Error(ErrorCode::PidConflict, what);
}

} // namespace

void validate(const InsertionConfig& config)
{
    const auto reserved = [](Pid pid) { return pid == kPatPid || pid == kNullPid; };
    if (reserved(config.data_pid) || reserved(config.pmt_pid))
        throw Error(ErrorCode::InvalidArgument, "data and PMT PIDs may not be 0x0000 or 0x1FFF");
    if (config.data_pid == config.pmt_pid)
        throw Error(ErrorCode::InvalidArgument, "data and PMT PIDs must differ");
    if (config.program_number == 0)
        throw Error(ErrorCode::InvalidArgument, "program number 0 is reserved for the network PID");
    if (!(config.reserve_fraction >= 0.0 && config.reserve_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "reserve fraction must lie in [0, 1)");
    if (!(config.pmt_interval > 0.0) || !(config.nominal_rate > 0.0) || config.verification_seconds < 0.0)
        throw Error(ErrorCode::InvalidArgument, "PMT interval and nominal rate must be positive");
}

MemoryPayload::MemoryPayload(std::vector<std::uint8_t> bytes)
    : bytes_(std::move(bytes)), message_id_(message_id_for(bytes_))
{
}

void MemoryPayload::read(std::uint64_t offset, std::span<std::uint8_t> out)
{
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(offset), out.size(), out.begin());
}

FilePayload::FilePayload(const std::filesystem::path& path) : file_(path, std::ios::binary)
{
    if (!file_)
        throw Error(ErrorCode::Io, "cannot open payload " + path.string());
    MessageHasher hasher;
    std::vector<std::uint8_t> buf(1 << 16);
    while (file_) {
        file_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(file_.gcount());
        hasher.update(std::span<const std::uint8_t>(buf.data(), got));
        size_ += got;
    }
    if (file_.bad())
        throw Error(ErrorCode::Io, "read failure on payload " + path.string());
    file_.clear();
    message_id_ = hasher.value();
}

void FilePayload::read(std::uint64_t offset, std::span<std::uint8_t> out)
{
    file_.seekg(static_cast<std::streamoff>(offset));
    file_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (static_cast<std::size_t>(file_.gcount()) != out.size())
        throw Error(ErrorCode::Io, "payload file shrank while inserting");
}

double plan_insertion(const MuxReport& report, double reserve_fraction, double pmt_interval)
{
    if (!(reserve_fraction >= 0.0 && reserve_fraction < 1.0) || !(pmt_interval > 0.0))
        throw Error(ErrorCode::InvalidArgument, "reserve fraction must lie in [0, 1) and the PMT interval be positive");
    const double estimate = report.null_fraction * report.total_bitrate * (1.0 - reserve_fraction)
        - static_cast<double>(kPacketBits) / pmt_interval;
    if (!(estimate > 0.0))
        throw Error(ErrorCode::NoCapacity, "no null bandwidth left for a new service");
    return estimate;
}

struct Inserter::State {
    InsertionConfig config;
    PayloadSource& payload;
    InsertionReport report;
    StreamClock clock;

    // 1 marks PIDs whose PMT sections are watched for conflicts.
    std::array<std::uint8_t, 8192> watched{};
    std::unordered_map<std::uint16_t, SectionAssembler> pmt_assemblers;
    std::vector<Section> scratch;

    std::vector<std::uint8_t> last_pat_section;
    PacketBytes last_pat_payload{};
    std::size_t last_pat_payload_size = 0;

    bool verified = false;
    double next_pmt_time = 0.0;
    std::vector<PacketBytes> pmt_packets;
    std::uint8_t pmt_cc = 0;
    std::uint8_t data_cc = 0;

    std::uint32_t chunk_count;
    std::uint32_t next_chunk = 0;
    std::deque<PacketBytes> pending;
    bool payload_done = false;

    State(const InsertionConfig& c, PayloadSource& p)
        : config(c), payload(p), clock(c.nominal_rate), chunk_count(chunk_count_for(p.size()))
    {
        validate(config);
        if (p.size() > std::numeric_limits<std::uint32_t>::max())
            throw Error(ErrorCode::InvalidArgument, "payload exceeds 4 GiB");
        report.chunk_count = chunk_count;
        Pmt pmt;
        pmt.program_number = config.program_number;
        pmt.pcr_pid = kNullPid;
        pmt.streams.push_back({kPrivateDataStreamType, config.data_pid, {}});
        pmt_packets = sectionize_bytes(serialize_pmt(pmt), config.pmt_pid, 0);
    }

    void check_pid(std::uint16_t pid, const char* where)
    {
        if (pid == config.data_pid.value() || pid == config.pmt_pid.value())
            conflict(std::string(where) + " uses PID " + std::to_string(pid) + " reserved for the new service");
    }

    void rewrite_pat(const PacketView& view, PacketBytes& out)
    {
        if (!view.payload_unit_start())
            throw Error(ErrorCode::PatTooLarge, "PAT spans more than one packet");
        const auto payload = view.payload();
        if (payload.empty())
            return;
        const std::size_t start = 1 + payload[0];
        if (start + 3 > payload.size())
            throw Error(ErrorCode::PatTooLarge, "PAT spans more than one packet");
        const std::size_t length = (static_cast<std::size_t>(payload[start + 1] & 0x0F) << 8) | payload[start + 2];
        if (start + 3 + length > payload.size())
            throw Error(ErrorCode::PatTooLarge, "PAT spans more than one packet");
        const auto section_span = payload.subspan(start, 3 + length);

        const std::size_t offset = kPacketSize - payload.size();
        if (std::equal(section_span.begin(), section_span.end(), last_pat_section.begin(), last_pat_section.end())
            && last_pat_payload_size == payload.size()) {
            std::copy_n(last_pat_payload.begin(), payload.size(), out.begin() + static_cast<std::ptrdiff_t>(offset));
            ++report.pat_packets_rewritten;
            return;
        }

        Section section;
        try {
            section = parse_section(section_span);
        } catch (const Error&) {
            return; // corrupt PAT passes through untouched
        }
        if (section.table_id != kPatTableId)
            return;
        if (section.last_section_number > 0)
            throw Error(ErrorCode::MultiSectionPat, "PAT with several sections is not supported");
        Pat pat = parse_pat(section);
        for (const auto& entry : pat.programs) {
            if (entry.program_number == config.program_number)
                conflict("program number " + std::to_string(config.program_number) + " already present in the PAT");
            check_pid(entry.pid.value(), "PAT entry");
            if (entry.program_number != 0 && !watched[entry.pid.value()]) {
                watched[entry.pid.value()] = 1;
                pmt_assemblers.try_emplace(entry.pid.value());
            }
        }
        pat.programs.push_back({config.program_number, config.pmt_pid});
        pat.version = bump_version(pat.version);
        const auto bytes = section_bytes(serialize_pat(pat));
        if (1 + bytes.size() > payload.size())
            throw Error(ErrorCode::PatTooLarge, "regenerated PAT does not fit in one packet");

        auto* dst = out.data() + offset;
        dst[0] = 0;
        std::copy(bytes.begin(), bytes.end(), dst + 1);
        std::fill(dst + 1 + bytes.size(), out.data() + kPacketSize, std::uint8_t{0xFF});

        last_pat_section.assign(section_span.begin(), section_span.end());
        std::copy_n(dst, payload.size(), last_pat_payload.begin());
        last_pat_payload_size = payload.size();
        ++report.pat_packets_rewritten;
    }

    void watch_pmt(const PacketView& view)
    {
        auto& assembler = pmt_assemblers[view.pid_value()];
        scratch.clear();
        assembler.push(view, scratch);
        for (const auto& section : scratch) {
            if (section.table_id != kPmtTableId)
                continue;
            const Pmt pmt = parse_pmt(section);
            check_pid(pmt.pcr_pid.value(), "PMT PCR PID");
            for (const auto& stream : pmt.streams)
                check_pid(stream.elementary_pid.value(), "PMT elementary stream");
        }
    }

    void queue_next_chunk()
    {
        if (next_chunk == chunk_count) {
            if (!config.repeat_payload) {
                payload_done = true;
                return;
            }
            next_chunk = 0;
        }
        DataChunk chunk;
        chunk.message_id = payload.message_id();
        chunk.chunk_index = next_chunk;
        chunk.chunk_count = chunk_count;
        chunk.total_length = static_cast<std::uint32_t>(payload.size());
        const std::uint64_t offset = std::uint64_t{next_chunk} * kMaxChunkPayload;
        chunk.payload.resize(static_cast<std::size_t>(std::min<std::uint64_t>(kMaxChunkPayload, payload.size() - offset)));
        payload.read(offset, chunk.payload);
        for (auto& p : sectionize_bytes(chunk_to_section(chunk), config.data_pid, data_cc)) {
            pending.push_back(p);
            data_cc = (data_cc + 1) & 0x0F;
        }
        ++next_chunk;
    }

    bool substitute(double now, PacketBytes& out)
    {
        if (payload_done && pending.empty())
            return false;
        if (now >= next_pmt_time) {
            out = pmt_packets.front();
            out[3] = static_cast<std::uint8_t>((out[3] & 0xF0) | pmt_cc);
            pmt_cc = (pmt_cc + 1) & 0x0F;
            next_pmt_time = now + config.pmt_interval;
            ++report.pmt_packets_sent;
            return true;
        }
        if (pending.empty())
            queue_next_chunk();
        if (pending.empty())
            return false;
        out = pending.front();
        pending.pop_front();
        ++report.chunk_packets_sent;
        if (pending.empty()) {
            ++report.chunks_sent;
            if (next_chunk == chunk_count && !config.repeat_payload)
                report.payload_complete = true;
        }
        return true;
    }

    void process(const PacketBytes& in, PacketBytes& out)
    {
        const PacketView view(in);
        const std::uint64_t index = report.input_packets++;
        out = in;
        clock.observe(view, index);
        if (!verified && clock.seconds_at(index) >= config.verification_seconds)
            verified = true;

        const std::uint16_t pid = view.pid_value();
        if (pid == kNullPid.value()) {
            if (view.transport_error())
                return;
            ++report.null_packets_seen;
            if (!verified)
                return;
            const double allowed = (1.0 - config.reserve_fraction) * static_cast<double>(report.null_packets_seen);
            if (static_cast<double>(report.packets_substituted + 1) > allowed + 1e-9)
                return;
            if (substitute(clock.seconds_at(index), out))
                ++report.packets_substituted;
            return;
        }
        check_pid(pid, "input packet");
        if (view.transport_error())
            return;
        if (pid == kPatPid.value())
            rewrite_pat(view, out);
        else if (watched[pid])
            watch_pmt(view);
    }

    InsertionReport finish()
    {
        report.duration_seconds = clock.seconds_at(report.input_packets);
        if (report.duration_seconds > 0.0)
            report.achieved_data_rate = static_cast<double>(report.chunk_packets_sent * kPacketBits) / report.duration_seconds;
        if (report.input_packets > 0)
            report.residual_null_fraction = static_cast<double>(report.null_packets_seen - report.packets_substituted)
                / static_cast<double>(report.input_packets);
        report.no_capacity = report.pmt_packets_sent == 0;
        return report;
    }
};

Inserter::Inserter(const InsertionConfig& config, PayloadSource& payload)
    : state_(std::make_unique<State>(config, payload))
{
}

Inserter::~Inserter() = default;

void Inserter::process(const PacketBytes& in, PacketBytes& out)
{
    state_->process(in, out);
}

InsertionReport Inserter::finish()
{
    return state_->finish();
}

InsertionReport insert(std::istream& in, std::ostream& out, const InsertionConfig& config, PayloadSource& payload)
{
    Inserter inserter(config, payload);
    std::vector<PacketBytes> batch;
    batch.reserve(512);
    const auto flush = [&] {
        out.write(reinterpret_cast<const char*>(batch.data()), static_cast<std::streamsize>(batch.size() * kPacketSize));
        batch.clear();
    };
    PacketBytes result;
    for_each_packet(in, [&](const PacketBytes& packet) {
        inserter.process(packet, result);
        batch.push_back(result);
        if (batch.size() == 512)
            flush();
    });
    flush();
    if (!out)
        throw Error(ErrorCode::Io, "write failure");
    return inserter.finish();
}

std::vector<PacketBytes> insert(std::span<const PacketBytes> input, const InsertionConfig& config,
                                PayloadSource& payload, InsertionReport* report)
{
    Inserter inserter(config, payload);
    std::vector<PacketBytes> output(input.size());
    for (std::size_t i = 0; i < input.size(); ++i)
        inserter.process(input[i], output[i]);
    const auto r = inserter.finish();
    if (report)
        *report = r;
    return output;
}

} // namespace tsmux
