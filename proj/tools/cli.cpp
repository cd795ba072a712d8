#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsmux/analyzer.hpp"
#include "tsmux/extractor.hpp"
#include "tsmux/report_export.hpp"
#include "tsmux/section.hpp"
#include "tsmux/stream_io.hpp"
#include "tsmux/tables.hpp"

namespace tsmux::cli {

namespace {

using nlohmann::json;

std::string hex_pid(Pid pid)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%04X", pid.value());
    return buf;
}

/// Input stream for a path, or the caller's stdin for "-".
class Input {
public:
    Input(const std::string& path, std::istream& stdin_stream)
    {
        if (path == "-") {
            stream_ = &stdin_stream;
            return;
        }
        file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
        if (!*file_)
            throw Error(ErrorCode::Io, "cannot open " + path);
        stream_ = file_.get();
    }

    std::istream& stream() { return *stream_; }

private:
    std::unique_ptr<std::ifstream> file_;
    std::istream* stream_ = nullptr;
};

/// Output written to a sibling temporary file and renamed on commit, so a
/// failed run never leaves a partial file behind.
class Output {
public:
    Output(std::string path, std::ostream& stdout_stream) : path_(std::move(path))
    {
        if (path_ == "-") {
            stream_ = &stdout_stream;
            return;
        }
        temp_ = path_ + ".partial";
        file_ = std::make_unique<std::ofstream>(temp_, std::ios::binary | std::ios::trunc);
        if (!*file_)
            throw Error(ErrorCode::Io, "cannot create " + temp_);
        stream_ = file_.get();
    }

    ~Output()
    {
        if (file_ && !committed_) {
            file_.reset();
            std::error_code ec;
            std::filesystem::remove(temp_, ec);
        }
    }

    Output(const Output&) = delete;
    Output& operator=(const Output&) = delete;

    std::ostream& stream() { return *stream_; }

    void commit()
    {
        stream_->flush();
        if (!*stream_)
            throw Error(ErrorCode::Io, "write failure on " + path_);
        if (file_) {
            file_->close();
            std::filesystem::rename(temp_, path_);
        }
        committed_ = true;
    }

private:
    std::string path_;
    std::string temp_;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
    bool committed_ = false;
};

std::string read_text_file(const std::string& path)
{
    std::ifstream file(path, std::ios::binary);
    if (!file)
        throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << file.rdbuf();
    return ss.str();
}

[[noreturn]] void bad_config(const std::string& what)
{
    throw Error(ErrorCode::InvalidArgument, what);
}

double json_rate(const json& value, const char* field)
{
    try {
        if (value.is_number())
            return value.get<double>();
        if (value.is_string())
            return static_cast<double>(parse_rate(value.get<std::string>()));
    } catch (const UsageError& e) {
        bad_config(std::string(field) + ": " + e.what());
    }
    bad_config(std::string(field) + " must be a number or a rate string");
}

Pid json_pid(const json& value, const char* field)
{
    try {
        if (value.is_number_unsigned())
            return Pid(static_cast<std::uint16_t>(std::min<std::uint64_t>(value.get<std::uint64_t>(), 0xFFFF)));
        if (value.is_string())
            return parse_pid(value.get<std::string>());
    } catch (const std::exception& e) {
        bad_config(std::string(field) + ": " + e.what());
    }
    bad_config(std::string(field) + " must be a PID");
}

template <typename T>
T json_get(const json& obj, const char* field, T fallback)
{
    const auto it = obj.find(field);
    if (it == obj.end())
        return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        bad_config(std::string("field '") + field + "' has the wrong type");
    }
}

const json& json_require(const json& obj, const char* field)
{
    const auto it = obj.find(field);
    if (it == obj.end())
        bad_config(std::string("missing field '") + field + "'");
    return *it;
}

ComplexityParams json_complexity(const json& svc)
{
    if (const auto it = svc.find("profile"); it != svc.end()) {
        const auto profile = it->is_string() ? parse_profile(it->get<std::string>()) : std::nullopt;
        if (!profile)
            bad_config("profile must be one of simple, moderate, complex, sports");
        return profile_params(*profile);
    }
    ComplexityParams params;
    if (const auto it = svc.find("complexity"); it != svc.end()) {
        params.mean = json_get(*it, "mean", params.mean);
        params.volatility = json_get(*it, "volatility", params.volatility);
        params.reversion = json_get(*it, "reversion", params.reversion);
    }
    return params;
}

int run_analyze(const std::string& input, const std::string& output, double window, bool averaging,
                const std::string& clock, const std::string& format_name, const std::optional<std::string>& capacity,
                double threshold, std::istream& in, std::ostream& out)
{
    const auto format = parse_report_format(format_name);
    if (!format)
        throw UsageError("--format must be csv, json, svg or text");
    AnalyzerOptions options;
    options.window_seconds = window;
    options.averaging = averaging;
    options.statmux_threshold = threshold;
    if (!(window > 0.0))
        throw UsageError("--window must be positive");
    if (clock == "pcr") {
        options.clock = ClockSource::pcr();
    } else if (clock.starts_with("pcr:")) {
        options.clock = ClockSource::pcr(parse_pid(clock.substr(4)));
    } else if (clock.starts_with("nominal:")) {
        options.clock = ClockSource::nominal(parse_rate(clock.substr(8)));
    } else {
        throw UsageError("--clock must be pcr, pcr:PID or nominal:RATE");
    }
    std::optional<double> capacity_bps;
    if (capacity)
        capacity_bps = static_cast<double>(parse_rate(*capacity));

    Input source(input, in);
    MuxAnalyzer analyzer(options);
    for_each_packet(source.stream(), [&](const PacketBytes& p) { analyzer.push(p); });
    const MuxReport report = analyzer.finish();

    std::optional<CapacitySummary> summary;
    if (capacity_bps)
        summary = capacity_summary(report, video_services(report), *capacity_bps);

    Output sink(output, out);
    sink.stream() << export_report(report, *format, summary ? &*summary : nullptr);
    sink.commit();
    return kExitOk;
}

int run_generate(const std::string& scenario_path, double duration, const std::optional<std::uint64_t>& seed,
                 const std::string& output, std::ostream& out, std::ostream& err)
{
    if (!(duration > 0.0))
        throw UsageError("--duration must be positive");
    MuxConfig config = parse_scenario(read_text_file(scenario_path));
    if (seed)
        config.seed = *seed;
    validate(config);

    Output sink(output, out);
    auto& stream = sink.stream();
    const auto summary = generate_stream(config, duration, [&](const PacketBytes& p) {
        stream.write(reinterpret_cast<const char*>(p.data()), kPacketSize);
    });
    sink.commit();
    err << "generated " << summary.packets << " packets (" << summary.gops.size() << " GOPs)\n";
    return kExitOk;
}

struct InsertFlags {
    std::string input;
    std::string output;
    std::string payload;
    std::optional<std::string> config_path;
    std::optional<std::string> data_pid;
    std::optional<std::string> pmt_pid;
    std::optional<std::uint16_t> program;
    std::optional<double> reserve;
    std::optional<std::string> label;
    std::optional<double> pmt_interval;
    bool repeat = false;
};

int run_insert(const InsertFlags& flags, std::istream& in, std::ostream& out, std::ostream& err)
{
    InsertionConfig config;
    if (flags.config_path)
        config = parse_insertion_config(read_text_file(*flags.config_path));
    if (flags.data_pid)
        config.data_pid = parse_pid(*flags.data_pid);
    if (flags.pmt_pid)
        config.pmt_pid = parse_pid(*flags.pmt_pid);
    if (flags.program)
        config.program_number = *flags.program;
    if (flags.reserve)
        config.reserve_fraction = *flags.reserve;
    if (flags.label)
        config.service_label = *flags.label;
    if (flags.pmt_interval)
        config.pmt_interval = *flags.pmt_interval;
    if (flags.repeat)
        config.repeat_payload = true;
    try {
        validate(config);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    FilePayload payload(flags.payload);
    Input source(flags.input, in);
    Output sink(flags.output, out);
    const InsertionReport report = insert(source.stream(), sink.stream(), config, payload);
    err << "service              " << config.program_number;
    if (!config.service_label.empty())
        err << " \"" << config.service_label << '"';
    err << " (PMT PID " << config.pmt_pid.value() << ", data PID " << config.data_pid.value() << ")\n";
    err << insertion_report_text(report);
    if (report.no_capacity)
        throw Error(ErrorCode::NoCapacity, "no null packet was available for the new service");
    if (!report.payload_complete && !config.repeat_payload)
        err << "warning: payload not fully inserted (" << report.chunks_sent << " of " << report.chunk_count
            << " chunks)\n";
    sink.commit();
    return kExitOk;
}

int run_extract(const std::string& input, const std::string& data_pid, const std::string& output, std::istream& in,
                std::ostream& out, std::ostream& err)
{
    const Pid pid = parse_pid(data_pid);
    Input source(input, in);
    Extractor extractor(pid);
    for_each_packet(source.stream(), [&](const PacketBytes& p) { extractor.push(p); });
    const ExtractResult result = extractor.finish();

    err << "message 0x" << std::hex << result.message_id << std::dec << ": " << result.total_length << " bytes in "
        << result.chunk_count << " chunks; crc failures " << result.crc_failures << ", duplicates "
        << result.duplicate_chunks << ", foreign " << result.foreign_chunks << ", malformed "
        << result.malformed_chunks << '\n';
    if (!result.complete()) {
        err << "missing chunks (index: offset+length):\n";
        for (const auto& gap : result.gaps)
            err << "  " << gap.chunk_index << ": " << gap.offset << '+' << gap.length << '\n';
        throw Error(ErrorCode::Incomplete,
                    std::to_string(result.missing_chunks.size()) + " of " + std::to_string(result.chunk_count) + " chunks missing");
    }
    Output sink(output, out);
    sink.stream().write(reinterpret_cast<const char*>(result.payload.data()),
                        static_cast<std::streamsize>(result.payload.size()));
    sink.commit();
    return kExitOk;
}

int run_inspect(const std::string& input, std::istream& in, std::ostream& out, std::ostream& err)
{
    Input source(input, in);
    std::map<std::uint16_t, std::uint64_t> counts;
    std::map<std::uint16_t, SectionAssembler> assemblers;
    std::optional<Pat> pat;
    std::map<std::uint16_t, Pmt> pmts; // by PMT PID
    std::optional<Sdt> sdt;
    std::vector<Section> sections;
    std::uint64_t total = 0;
    assemblers[kPatPid.value()];
    assemblers[kSdtPid.value()];

    for_each_packet(source.stream(), [&](const PacketBytes& packet) {
        const PacketView view(packet);
        ++total;
        ++counts[view.pid_value()];
        const auto it = assemblers.find(view.pid_value());
        if (it == assemblers.end())
            return;
        sections.clear();
        it->second.push(view, sections);
        for (const auto& s : sections) {
            try {
                if (s.table_id == kPatTableId && view.pid() == kPatPid) {
                    pat = parse_pat(s);
                    for (const auto& entry : pat->programs)
                        if (entry.program_number != 0)
                            assemblers.try_emplace(entry.pid.value());
                } else if (s.table_id == kPmtTableId) {
                    pmts[view.pid_value()] = parse_pmt(s);
                } else if (s.table_id == kSdtActualTableId && view.pid() == kSdtPid) {
                    sdt = parse_sdt(s);
                }
            } catch (const Error& e) {
                err << "warning: skipping table on PID " << hex_pid(view.pid()) << ": " << e.what() << '\n';
            }
        }
    });
    if (total == 0)
        throw Error(ErrorCode::EmptyStream, "no packets in input");

    const auto name_of = [&](std::uint16_t program) -> std::string {
        if (sdt)
            for (const auto& s : sdt->services)
                if (s.service_id == program)
                    return s.name;
        return {};
    };

    if (!pat) {
        err << "warning: no PAT found; listing PID counts only\n";
    } else {
        out << "PAT  transport_stream_id " << pat->transport_stream_id << ", version " << int{pat->version} << '\n';
        for (const auto& entry : pat->programs) {
            if (entry.program_number == 0) {
                out << "  network PID " << hex_pid(entry.pid) << '\n';
                continue;
            }
            out << "  program " << entry.program_number << "  PMT " << hex_pid(entry.pid);
            if (const auto name = name_of(entry.program_number); !name.empty())
                out << "  \"" << name << '"';
            out << '\n';
            const auto pmt = pmts.find(entry.pid.value());
            if (pmt == pmts.end()) {
                out << "    (PMT not seen)\n";
                continue;
            }
            out << "    PCR PID " << hex_pid(pmt->second.pcr_pid) << ", version " << int{pmt->second.version} << '\n';
            for (const auto& stream : pmt->second.streams) {
                char line[64];
                std::snprintf(line, sizeof line, "    stream type 0x%02X  PID ", stream.stream_type);
                out << line << hex_pid(stream.elementary_pid) << '\n';
            }
        }
    }
    out << "PID     packets     share\n";
    for (const auto& [pid, count] : counts) {
        char line[64];
        std::snprintf(line, sizeof line, "0x%04X  %10llu  %6.2f%%\n", pid, static_cast<unsigned long long>(count),
                      100.0 * static_cast<double>(count) / static_cast<double>(total));
        out << line;
    }
    out << "total   " << total << '\n';
    return kExitOk;
}

} // namespace

std::int64_t parse_rate(std::string_view text)
{
    if (text.empty())
        throw UsageError("empty rate");
    double multiplier = 1.0;
    switch (text.back()) {
    case 'k':
    case 'K': multiplier = 1e3; text.remove_suffix(1); break;
    case 'M': multiplier = 1e6; text.remove_suffix(1); break;
    case 'G': multiplier = 1e9; text.remove_suffix(1); break;
    default: break;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !(value >= 0.0))
        throw UsageError("invalid rate '" + std::string(text) + "'");
    return std::llround(value * multiplier);
}

Pid parse_pid(std::string_view text)
{
    int base = 10;
    if (text.starts_with("0x") || text.starts_with("0X")) {
        base = 16;
        text.remove_prefix(2);
    }
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || value > 0x1FFF)
        throw UsageError("invalid PID '" + std::string(text) + "'");
    return Pid(static_cast<std::uint16_t>(value));
}

std::string format_rate(double bits_per_second)
{
    char buf[32];
    if (std::fabs(bits_per_second) >= 1e6)
        std::snprintf(buf, sizeof buf, "%.3fM", bits_per_second / 1e6);
    else if (std::fabs(bits_per_second) >= 1e3)
        std::snprintf(buf, sizeof buf, "%.3fk", bits_per_second / 1e3);
    else
        std::snprintf(buf, sizeof buf, "%.0f", bits_per_second);
    return buf;
}

MuxConfig parse_scenario(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        bad_config(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        bad_config("scenario must be a JSON object");

    MuxConfig config;
    config.channel_rate = json_rate(json_require(doc, "channel_rate"), "channel_rate");
    config.gop_duration = json_get(doc, "gop_duration", config.gop_duration);
    config.psi_interval = json_get(doc, "psi_interval", config.psi_interval);
    config.pcr_interval = json_get(doc, "pcr_interval", config.pcr_interval);
    config.seed = json_get<std::uint64_t>(doc, "seed", config.seed);
    if (const auto it = doc.find("null_reserve_rate"); it != doc.end())
        config.null_reserve_rate = json_rate(*it, "null_reserve_rate");
    config.transport_stream_id = json_get<std::uint16_t>(doc, "transport_stream_id", config.transport_stream_id);

    const auto& services = json_require(doc, "services");
    if (!services.is_array())
        bad_config("services must be an array");
    for (const auto& svc : services) {
        ServiceConfig s;
        s.encoder.service_id = json_get<std::uint16_t>(svc, "service_id", 0);
        s.name = json_get<std::string>(svc, "name", "");
        s.encoder.pid = json_pid(json_require(svc, "pid"), "pid");
        s.pmt_pid = json_pid(json_require(svc, "pmt_pid"), "pmt_pid");
        const auto mode = parse_rate_mode(json_get<std::string>(svc, "mode", "abr"));
        if (!mode)
            bad_config("mode must be one of vbr, capped-vbr, abr, cbr");
        s.encoder.mode = *mode;
        s.encoder.max_rate = json_rate(json_require(svc, "max_rate"), "max_rate");
        s.encoder.min_rate = svc.contains("min_rate") ? json_rate(svc["min_rate"], "min_rate") : s.encoder.max_rate;
        s.complexity = json_complexity(svc);
        s.encoder.complexity_trace = json_get<std::vector<double>>(svc, "complexity_trace", {});
        config.services.push_back(std::move(s));
    }
    return config;
}

InsertionConfig parse_insertion_config(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        bad_config(std::string("insertion config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        bad_config("insertion config must be a JSON object");
    InsertionConfig config;
    config.program_number = json_get<std::uint16_t>(doc, "program_number", 0);
    if (const auto it = doc.find("data_pid"); it != doc.end())
        config.data_pid = json_pid(*it, "data_pid");
    if (const auto it = doc.find("pmt_pid"); it != doc.end())
        config.pmt_pid = json_pid(*it, "pmt_pid");
    config.reserve_fraction = json_get(doc, "reserve_fraction", config.reserve_fraction);
    config.service_label = json_get<std::string>(doc, "service_label", "");
    config.pmt_interval = json_get(doc, "pmt_interval", config.pmt_interval);
    config.verification_seconds = json_get(doc, "verification_seconds", config.verification_seconds);
    if (const auto it = doc.find("nominal_rate"); it != doc.end())
        config.nominal_rate = json_rate(*it, "nominal_rate");
    config.repeat_payload = json_get(doc, "repeat_payload", config.repeat_payload);
    return config;
}

std::string insertion_report_text(const InsertionReport& r)
{
    std::ostringstream out;
    out << "input packets        " << r.input_packets << '\n'
        << "null packets seen    " << r.null_packets_seen << '\n'
        << "packets substituted  " << r.packets_substituted << " (PMT " << r.pmt_packets_sent << ", data "
        << r.chunk_packets_sent << ")\n"
        << "PAT packets rewritten " << r.pat_packets_rewritten << '\n'
        << "chunks sent          " << r.chunks_sent << " of " << r.chunk_count << '\n'
        << "data rate            " << format_rate(r.achieved_data_rate) << "b/s\n";
    char line[64];
    std::snprintf(line, sizeof line, "residual nulls       %.3f%%\n", 100.0 * r.residual_null_fraction);
    out << line;
    return out.str();
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Transport stream multiplex analysis and null-packet service insertion", "tsmux"};
    app.require_subcommand(1);

    std::string input;
    std::string output = "-";

    auto* analyze = app.add_subcommand("analyze", "Per-PID and per-program bitrate report");
    double window = 0.5;
    bool averaging = false;
    std::string clock = "pcr";
    std::string format = "text";
    std::optional<std::string> capacity;
    double threshold = 0.10;
    analyze->add_option("input", input, "Transport stream, or - for stdin")->required();
    analyze->add_option("--window", window, "Window length in seconds")->capture_default_str();
    analyze->add_flag("--averaging", averaging, "Report cumulative running means");
    analyze->add_option("--clock", clock, "pcr, pcr:PID or nominal:RATE")->capture_default_str();
    analyze->add_option("--format", format, "csv, json, svg or text")->capture_default_str();
    analyze->add_option("--capacity", capacity, "Channel rate for the capacity summary (e.g. 38M)");
    analyze->add_option("--threshold", threshold, "Coefficient-of-variation threshold")->capture_default_str();
    analyze->add_option("-o,--output", output, "Report path, or - for stdout")->capture_default_str();

    auto* generate = app.add_subcommand("generate", "Synthesize a statistically multiplexed stream");
    std::string scenario;
    double duration = 10.0;
    std::optional<std::uint64_t> seed;
    generate->add_option("scenario", scenario, "Scenario JSON file")->required();
    generate->add_option("--duration", duration, "Seconds of stream")->capture_default_str();
    generate->add_option("--seed", seed, "Overrides the scenario seed");
    generate->add_option("-o,--output", output, "Stream path, or - for stdout")->capture_default_str();

    auto* ins = app.add_subcommand("insert", "Replace null packets with a data service");
    InsertFlags flags;
    ins->add_option("input", flags.input, "Input stream, or -")->required();
    ins->add_option("output", flags.output, "Output stream, or -")->required();
    ins->add_option("--payload", flags.payload, "File to carry")->required();
    ins->add_option("--config", flags.config_path, "Insertion settings JSON (flags override it)");
    ins->add_option("--data-pid", flags.data_pid, "PID for DataChunk sections");
    ins->add_option("--pmt-pid", flags.pmt_pid, "PID for the new PMT");
    ins->add_option("--program", flags.program, "Program number of the new service");
    ins->add_option("--reserve", flags.reserve, "Fraction of nulls left untouched (default 0.2)");
    ins->add_option("--label", flags.label, "Service label");
    ins->add_option("--pmt-interval", flags.pmt_interval, "Seconds between PMTs (default 0.5)");
    ins->add_flag("--repeat", flags.repeat, "Carousel: resend the payload until the stream ends");

    auto* ext = app.add_subcommand("extract", "Recover a payload carried by insert");
    std::string data_pid;
    ext->add_option("input", input, "Transport stream, or -")->required();
    ext->add_option("--data-pid", data_pid, "PID carrying DataChunk sections")->required();
    ext->add_option("-o,--output", output, "Payload path, or - for stdout")->capture_default_str();

    auto* inspect = app.add_subcommand("inspect", "List PAT/PMT/SDT contents and PID counts");
    inspect->add_option("input", input, "Transport stream, or -")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (analyze->parsed())
            return run_analyze(input, output, window, averaging, clock, format, capacity, threshold, in, out);
        if (generate->parsed())
            return run_generate(scenario, duration, seed, output, out, err);
        if (ins->parsed())
            return run_insert(flags, in, out, err);
        if (ext->parsed())
            return run_extract(input, data_pid, output, in, out, err);
        if (inspect->parsed())
            return run_inspect(input, in, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace tsmux::cli
