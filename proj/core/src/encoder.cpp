#include "tsmux/encoder.hpp"

#include <algorithm>
#include <numeric>

namespace tsmux {

std::string_view to_string(RateMode mode) noexcept
{
    switch (mode) {
    case RateMode::Vbr: return "vbr";
    case RateMode::CappedVbr: return "capped-vbr";
    case RateMode::Abr: return "abr";
    case RateMode::Cbr: return "cbr";
    }
    return "abr";
}

std::optional<RateMode> parse_rate_mode(std::string_view name) noexcept
{
    if (name == "vbr")
        return RateMode::Vbr;
    if (name == "capped-vbr" || name == "capped_vbr")
        return RateMode::CappedVbr;
    if (name == "abr")
        return RateMode::Abr;
    if (name == "cbr")
        return RateMode::Cbr;
    return std::nullopt;
}

void validate(const EncoderModel& model)
{
    if (!(model.min_rate > 0.0) || model.min_rate > model.max_rate)
        throw Error(ErrorCode::InvalidArgument, "service " + std::to_string(model.service_id) + ": need 0 < min_rate <= max_rate");
    if (model.mode == RateMode::Cbr && model.min_rate != model.max_rate)
        throw Error(ErrorCode::InvalidArgument, "service " + std::to_string(model.service_id) + ": CBR requires min_rate == max_rate");
    for (double c : model.complexity_trace)
        if (!(c > 0.0))
            throw Error(ErrorCode::InvalidArgument, "complexity values must be positive");
}

double encoder_rate(const EncoderModel& model, std::size_t gop_index, std::optional<double> allocated)
{
    if (model.complexity_trace.empty())
        return encoder_rate(model, gop_index, allocated, 1.0);
    const double sum = std::accumulate(model.complexity_trace.begin(), model.complexity_trace.end(), 0.0);
    return encoder_rate(model, gop_index, allocated, sum / static_cast<double>(model.complexity_trace.size()));
}

double encoder_rate(const EncoderModel& model, std::size_t gop_index, std::optional<double> allocated, double trace_mean)
{
    switch (model.mode) {
    case RateMode::Cbr:
        return model.max_rate;
    case RateMode::Abr:
        return std::clamp(allocated.value_or(model.max_rate), model.min_rate, model.max_rate);
    case RateMode::Vbr:
    case RateMode::CappedVbr: {
        if (gop_index >= model.complexity_trace.size())
            throw Error(ErrorCode::InvalidArgument, "GOP index beyond the complexity trace");
        const double target = 0.5 * (model.min_rate + model.max_rate);
        const double rate = std::max(model.min_rate, target * model.complexity_trace[gop_index] / trace_mean);
        return model.mode == RateMode::CappedVbr ? std::min(rate, model.max_rate) : rate;
    }
    }
    return model.max_rate;
}

} // namespace tsmux
