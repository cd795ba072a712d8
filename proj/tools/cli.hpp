#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tsmux/generator.hpp"
#include "tsmux/inserter.hpp"

namespace tsmux::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Bad flag values; reported with exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bits/second from "38000000", "38M", "1.5M" or "500k". Throws UsageError.
std::int64_t parse_rate(std::string_view text);
/// Decimal or 0x-prefixed hexadecimal PID. Throws UsageError.
Pid parse_pid(std::string_view text);
std::string format_rate(double bits_per_second);

/// Scenario file for `generate`: every MuxConfig field, rates as numbers or
/// suffixed strings. Throws Error(InvalidArgument) on malformed input.
MuxConfig parse_scenario(std::string_view json);
/// Insertion settings file for `insert --config`.
InsertionConfig parse_insertion_config(std::string_view json);

std::string insertion_report_text(const InsertionReport& report);

/// Runs one invocation. `args` excludes the program name. Stream paths "-"
/// map to `in` / `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace tsmux::cli
