#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tsmux/analyzer.hpp"

namespace tsmux {

enum class ReportFormat { Csv, Json, Svg, Text };

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept;

/// CSV columns: window_start_s,pid,program,bits_per_second (one row per PID per window).
/// JSON mirrors MuxReport field for field. SVG is a stacked area chart of
/// per-program bitrate with unassigned PIDs next and null packets as the top band.
/// When `capacity` is given, JSON and text output carry the summary as well.
std::string export_report(const MuxReport& report, ReportFormat format, const CapacitySummary* capacity = nullptr);

MuxReport report_from_json(std::string_view json);

std::string capacity_to_text(const CapacitySummary& summary);

} // namespace tsmux
