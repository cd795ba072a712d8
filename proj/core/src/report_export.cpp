#include "tsmux/report_export.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace tsmux {

namespace {

using nlohmann::json;

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string mbps(double bps)
{
    return fmt("%.3f", bps / 1e6);
}

std::string xml_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

json series_json(const std::vector<WindowRate>& series)
{
    json out = json::array();
    for (const auto& w : series)
        out.push_back(json::array({w.window_index, w.bits_per_second}));
    return out;
}

std::vector<WindowRate> series_from(const json& j)
{
    std::vector<WindowRate> out;
    for (const auto& w : j)
        out.push_back({w.at(0).get<std::size_t>(), w.at(1).get<double>()});
    return out;
}

json optional_pid(const std::optional<Pid>& pid)
{
    return pid ? json(pid->value()) : json(nullptr);
}

std::optional<Pid> optional_pid_from(const json& j)
{
    if (j.is_null())
        return std::nullopt;
    return Pid{j.get<std::uint16_t>()};
}

MuxVerdict verdict_from(std::string_view s)
{
    if (s == "static")
        return MuxVerdict::Static;
    if (s == "statistical")
        return MuxVerdict::Statistical;
    return MuxVerdict::Unknown;
}

json capacity_json(const CapacitySummary& c)
{
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"service", r.label}, {"pid", r.pid.value()}, {"max", r.max_bitrate}, {"min", r.min_bitrate}});
    return {{"rows", rows},
            {"total_max", c.total_max},
            {"total_min", c.total_min},
            {"capacity", c.capacity},
            {"difference_at_max", c.difference_at_max},
            {"difference_at_min", c.difference_at_min}};
}

std::string to_json(const MuxReport& r, const CapacitySummary* capacity)
{
    json pids = json::array();
    for (const auto& s : r.pids)
        pids.push_back({{"pid", s.pid.value()},
                        {"packet_count", s.packet_count},
                        {"byte_count", s.byte_count},
                        {"min_bitrate", s.min_bitrate},
                        {"max_bitrate", s.max_bitrate},
                        {"mean_bitrate", s.mean_bitrate},
                        {"series", series_json(s.series)}});
    json programs = json::array();
    for (const auto& p : r.programs) {
        json members = json::array();
        for (const auto pid : p.pids)
            members.push_back(pid.value());
        programs.push_back({{"program_number", p.program_number},
                            {"pmt_pid", p.pmt_pid.value()},
                            {"name", p.name},
                            {"pids", members},
                            {"video_pid", optional_pid(p.video_pid)},
                            {"min_bitrate", p.min_bitrate},
                            {"max_bitrate", p.max_bitrate},
                            {"mean_bitrate", p.mean_bitrate},
                            {"series", series_json(p.series)}});
    }
    json j = {{"total_bitrate", r.total_bitrate},
              {"duration", r.duration},
              {"window_length", r.window_length},
              {"averaging", r.averaging},
              {"total_packets", r.total_packets},
              {"total_bytes", r.total_bytes},
              {"null_packets", r.null_packets},
              {"null_fraction", r.null_fraction},
              {"window_count", r.window_count},
              {"clock_pid", optional_pid(r.clock_pid)},
              {"verdict", std::string(to_string(r.verdict))},
              {"pids", pids},
              {"programs", programs}};
    if (capacity)
        j["capacity_summary"] = capacity_json(*capacity);
    return j.dump(2) + "\n";
}

std::string to_csv(const MuxReport& r)
{
    std::ostringstream out;
    out << "window_start_s,pid,program,bits_per_second\n";
    for (std::size_t w = 0; w < r.window_count; ++w) {
        const std::string start = fmt("%.6g", static_cast<double>(w) * r.window_length);
        for (const auto& s : r.pids) {
            const auto* program = r.program_of(s.pid);
            out << start << ',' << s.pid.value() << ',';
            if (program)
                out << program->program_number;
            out << ',' << fmt("%.17g", s.series[w].bits_per_second) << '\n';
        }
    }
    return out.str();
}

struct Band {
    std::string label;
    std::string color;
    std::vector<double> values;
};

std::string to_svg(const MuxReport& r)
{
    static constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
                                               "#b07aa1", "#ff9da7", "#9c755f", "#86bcb6", "#d37295", "#a0cbe8"};
    const std::size_t n = r.window_count;
    std::vector<double> total(n, 0.0);
    for (const auto& s : r.pids)
        for (std::size_t w = 0; w < n; ++w)
            total[w] += s.series[w].bits_per_second;

    std::vector<Band> bands;
    std::vector<double> assigned(n, 0.0);
    for (std::size_t i = 0; i < r.programs.size(); ++i) {
        const auto& p = r.programs[i];
        Band band{p.name.empty() ? "Program " + std::to_string(p.program_number) : p.name,
                  kPalette[i % std::size(kPalette)], {}};
        for (std::size_t w = 0; w < n; ++w) {
            band.values.push_back(p.series[w].bits_per_second);
            assigned[w] += p.series[w].bits_per_second;
        }
        bands.push_back(std::move(band));
    }
    const auto* nulls = r.find_pid(kNullPid);
    Band other{"Other (PSI/SI, unassigned)", "#bab0ac", {}};
    bool has_other = false;
    for (std::size_t w = 0; w < n; ++w) {
        const double null_rate = nulls ? nulls->series[w].bits_per_second : 0.0;
        const double rest = std::max(0.0, total[w] - assigned[w] - null_rate);
        has_other = has_other || rest > 0.0;
        other.values.push_back(rest);
    }
    if (has_other)
        bands.push_back(std::move(other));
    Band null_band{"Null packets", "#f4f4f4", {}};
    for (std::size_t w = 0; w < n; ++w)
        null_band.values.push_back(nulls ? nulls->series[w].bits_per_second : 0.0);
    bands.push_back(std::move(null_band));

    double peak = 0.0;
    std::vector<double> stack(n, 0.0);
    for (const auto& b : bands)
        for (std::size_t w = 0; w < n; ++w)
            stack[w] += b.values[w];
    for (double v : stack)
        peak = std::max(peak, v);
    if (peak <= 0.0)
        peak = 1.0;
    peak *= 1.05;

    constexpr double kWidth = 960, kHeight = 480, kLeft = 70, kRight = 220, kTop = 40, kBottom = 50;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto x_at = [&](std::size_t edge) { return kLeft + plot_w * static_cast<double>(edge) / static_cast<double>(std::max<std::size_t>(n, 1)); };
    auto y_at = [&](double v) { return kTop + plot_h * (1.0 - v / peak); };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">Multiplex usage ("
        << (r.averaging ? "averaged" : "real-time") << ", " << fmt("%.3g", r.window_length) << " s windows)</text>\n";

    std::vector<double> lower(n, 0.0);
    out << "<g id=\"bands\">\n";
    for (const auto& b : bands) {
        std::ostringstream d;
        d << "M " << fmt("%.2f", x_at(0)) << ' ' << fmt("%.2f", y_at(lower[0] + b.values[0]));
        for (std::size_t w = 0; w < n; ++w) {
            const double y = y_at(lower[w] + b.values[w]);
            d << " L " << fmt("%.2f", x_at(w)) << ' ' << fmt("%.2f", y) << " L " << fmt("%.2f", x_at(w + 1)) << ' '
              << fmt("%.2f", y);
        }
        for (std::size_t w = n; w-- > 0;) {
            const double y = y_at(lower[w]);
            d << " L " << fmt("%.2f", x_at(w + 1)) << ' ' << fmt("%.2f", y) << " L " << fmt("%.2f", x_at(w)) << ' '
              << fmt("%.2f", y);
        }
        d << " Z";
        out << "<path d=\"" << d.str() << "\" fill=\"" << b.color << "\" stroke=\"#555555\" stroke-width=\"0.3\">"
            << "<title>" << xml_escape(b.label) << "</title></path>\n";
        for (std::size_t w = 0; w < n; ++w)
            lower[w] += b.values[w];
    }
    out << "</g>\n";

    out << "<g id=\"axes\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = peak * tick / 5.0;
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.2f", y_at(v) + 4) << "\" text-anchor=\"end\">"
            << fmt("%.1f", v / 1e6) << "</text>\n";
    }
    out << "<text x=\"14\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 14 " << kTop + plot_h / 2
        << ")\" text-anchor=\"middle\">Mbit/s</text>\n";
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">time (s), 0 to "
        << fmt("%.3g", static_cast<double>(n) * r.window_length) << "</text>\n";
    out << "</g>\n";

    out << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
    double ly = kTop;
    for (auto it = bands.rbegin(); it != bands.rend(); ++it) {
        out << "<rect x=\"" << kLeft + plot_w + 16 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
            << it->color << "\" stroke=\"#555555\"/>\n";
        out << "<text x=\"" << kLeft + plot_w + 34 << "\" y=\"" << ly + 10 << "\">" << xml_escape(it->label) << "</text>\n";
        ly += 18;
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

std::string to_text(const MuxReport& r, const CapacitySummary* capacity)
{
    std::ostringstream out;
    out << "duration        " << fmt("%.3f", r.duration) << " s\n";
    out << "packets         " << r.total_packets << "\n";
    out << "total bitrate   " << mbps(r.total_bitrate) << " Mbit/s\n";
    out << "null packets    " << r.null_packets << " (" << fmt("%.2f", r.null_fraction * 100.0) << " %, "
        << mbps(r.null_fraction * r.total_bitrate) << " Mbit/s)\n";
    out << "windows         " << r.window_count << " x " << fmt("%.3g", r.window_length) << " s"
        << (r.averaging ? " (averaged)" : " (real-time)") << "\n";
    if (r.clock_pid)
        out << "clock           PCR on PID " << r.clock_pid->value() << "\n";
    out << "multiplexing    " << to_string(r.verdict) << "\n\n";

    out << "  PID   program    packets   mean Mb/s    min Mb/s    max Mb/s\n";
    for (const auto& s : r.pids) {
        const auto* program = r.program_of(s.pid);
        char line[128];
        std::snprintf(line, sizeof line, "%5u  %8s  %9llu  %10s  %10s  %10s\n", s.pid.value(),
                      program ? std::to_string(program->program_number).c_str() : (s.pid == kNullPid ? "null" : "-"),
                      static_cast<unsigned long long>(s.packet_count), mbps(s.mean_bitrate).c_str(),
                      mbps(s.min_bitrate).c_str(), mbps(s.max_bitrate).c_str());
        out << line;
    }
    if (!r.programs.empty()) {
        out << "\n  program  name                        mean Mb/s    min Mb/s    max Mb/s\n";
        for (const auto& p : r.programs) {
            char line[160];
            std::snprintf(line, sizeof line, "  %7u  %-26.26s  %10s  %10s  %10s\n", p.program_number, p.name.c_str(),
                          mbps(p.mean_bitrate).c_str(), mbps(p.min_bitrate).c_str(), mbps(p.max_bitrate).c_str());
            out << line;
        }
    }
    if (capacity)
        out << '\n' << capacity_to_text(*capacity);
    return out.str();
}

} // namespace

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept
{
    if (name == "csv")
        return ReportFormat::Csv;
    if (name == "json")
        return ReportFormat::Json;
    if (name == "svg")
        return ReportFormat::Svg;
    if (name == "text")
        return ReportFormat::Text;
    return std::nullopt;
}

std::string export_report(const MuxReport& report, ReportFormat format, const CapacitySummary* capacity)
{
    switch (format) {
    case ReportFormat::Csv: return to_csv(report);
    case ReportFormat::Json: return to_json(report, capacity);
    case ReportFormat::Svg: return to_svg(report);
    case ReportFormat::Text: return to_text(report, capacity);
    }
    return {};
}

MuxReport report_from_json(std::string_view text)
{
    try {
        const auto j = json::parse(text);
        MuxReport r;
        r.total_bitrate = j.at("total_bitrate").get<double>();
        r.duration = j.at("duration").get<double>();
        r.window_length = j.at("window_length").get<double>();
        r.averaging = j.at("averaging").get<bool>();
        r.total_packets = j.at("total_packets").get<std::uint64_t>();
        r.total_bytes = j.at("total_bytes").get<std::uint64_t>();
        r.null_packets = j.at("null_packets").get<std::uint64_t>();
        r.null_fraction = j.at("null_fraction").get<double>();
        r.window_count = j.at("window_count").get<std::size_t>();
        r.clock_pid = optional_pid_from(j.at("clock_pid"));
        r.verdict = verdict_from(j.at("verdict").get<std::string>());
        for (const auto& s : j.at("pids")) {
            PidStats stats;
            stats.pid = Pid{s.at("pid").get<std::uint16_t>()};
            stats.packet_count = s.at("packet_count").get<std::uint64_t>();
            stats.byte_count = s.at("byte_count").get<std::uint64_t>();
            stats.min_bitrate = s.at("min_bitrate").get<double>();
            stats.max_bitrate = s.at("max_bitrate").get<double>();
            stats.mean_bitrate = s.at("mean_bitrate").get<double>();
            stats.series = series_from(s.at("series"));
            r.pids.push_back(std::move(stats));
        }
        for (const auto& p : j.at("programs")) {
            ProgramStats program;
            program.program_number = p.at("program_number").get<std::uint16_t>();
            program.pmt_pid = Pid{p.at("pmt_pid").get<std::uint16_t>()};
            program.name = p.at("name").get<std::string>();
            for (const auto& pid : p.at("pids"))
                program.pids.push_back(Pid{pid.get<std::uint16_t>()});
            program.video_pid = optional_pid_from(p.at("video_pid"));
            program.min_bitrate = p.at("min_bitrate").get<double>();
            program.max_bitrate = p.at("max_bitrate").get<double>();
            program.mean_bitrate = p.at("mean_bitrate").get<double>();
            program.series = series_from(p.at("series"));
            r.programs.push_back(std::move(program));
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedBody, std::string("report JSON: ") + e.what());
    }
}

std::string capacity_to_text(const CapacitySummary& c)
{
    std::ostringstream out;
    out << "  service                       max Mb/s    min Mb/s\n";
    for (const auto& row : c.rows) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-26.26s  %10s  %10s\n", row.label.c_str(), mbps(row.max_bitrate).c_str(),
                      mbps(row.min_bitrate).c_str());
        out << line;
    }
    char line[128];
    std::snprintf(line, sizeof line, "  %-26s  %10s  %10s\n", "Total", mbps(c.total_max).c_str(), mbps(c.total_min).c_str());
    out << line;
    std::snprintf(line, sizeof line, "  %-26s  %10s  %10s\n", "Capacity", mbps(c.capacity).c_str(), mbps(c.capacity).c_str());
    out << line;
    std::snprintf(line, sizeof line, "  %-26s  %10s  %10s\n", "Difference", mbps(c.difference_at_max).c_str(),
                  mbps(c.difference_at_min).c_str());
    out << line;
    return out.str();
}

} // namespace tsmux
