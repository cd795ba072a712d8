#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tsmux/packet.hpp"

namespace tsmux {

enum class RateMode { Vbr, CappedVbr, Abr, Cbr };

std::string_view to_string(RateMode mode) noexcept;
std::optional<RateMode> parse_rate_mode(std::string_view name) noexcept;

struct EncoderModel {
    std::uint16_t service_id = 0;
    RateMode mode = RateMode::Abr;
    double min_rate = 0.0; // bits/second
    double max_rate = 0.0; // bits/second
    std::vector<double> complexity_trace; // one entry per GOP, all > 0
    Pid pid;
};

/// Throws InvalidArgument unless 0 < min <= max (and min == max for CBR).
void validate(const EncoderModel& model);

/// Rate the encoder produces for one GOP:
///  - VBR: (min+max)/2 scaled by c_t / mean(c), never below min, no ceiling;
///  - CappedVBR: the VBR rate clipped to [min, max];
///  - ABR: the statmux allocation clipped to [min, max] (max when no allocation is given);
///  - CBR: max.
double encoder_rate(const EncoderModel& model, std::size_t gop_index, std::optional<double> allocated);

/// Same as encoder_rate with the trace mean supplied by the caller.
double encoder_rate(const EncoderModel& model, std::size_t gop_index, std::optional<double> allocated,
                    double trace_mean);

} // namespace tsmux
