#include <sstream>
#include <string>

#include "doctest.h"
#include "support.hpp"
#include "tsmux/report_export.hpp"

using namespace tsmux;

namespace {

MuxReport sample_report()
{
    AnalyzerOptions o;
    return measure(generate_packets(test::statmux_scenario(6e6, 2, 0.1, 4), 3.0), o);
}

std::size_t count_of(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_CASE("JSON export reads back into an equal report")
{
    const auto report = sample_report();
    const auto json = export_report(report, ReportFormat::Json);
    CHECK(report_from_json(json) == report);
    CHECK_THROWS_AS(report_from_json("{not json"), Error);
}

TEST_CASE("CSV has one row per PID per window")
{
    const auto report = sample_report();
    const auto csv = export_report(report, ReportFormat::Csv);
    CHECK(csv.rfind("window_start_s,pid,program,bits_per_second\n", 0) == 0);
    CHECK(count_of(csv, "\n") == 1 + report.pids.size() * report.window_count);
}

TEST_CASE("SVG stacks one band per program plus nulls")
{
    const auto report = sample_report();
    const auto svg = export_report(report, ReportFormat::Svg);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    // PSI PIDs outside any program form the "Other" band.
    CHECK(count_of(svg, "<path") == report.programs.size() + 2);
}

TEST_CASE("text export names the verdict and carries the capacity table")
{
    const auto report = sample_report();
    const auto summary = capacity_summary(report, video_services(report), 6e6);
    const auto text = export_report(report, ReportFormat::Text, &summary);
    CHECK(text.find(std::string(to_string(report.verdict))) != std::string::npos);
    CHECK(text.find("svc1") != std::string::npos);
    CHECK(text.find("Difference") != std::string::npos);
    const auto json = export_report(report, ReportFormat::Json, &summary);
    CHECK(json.find("capacity_summary") != std::string::npos);
}

TEST_CASE("format names")
{
    CHECK(parse_report_format("csv") == ReportFormat::Csv);
    CHECK(parse_report_format("svg") == ReportFormat::Svg);
    CHECK_FALSE(parse_report_format("xml").has_value());
}
