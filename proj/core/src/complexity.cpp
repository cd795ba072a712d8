#include "tsmux/complexity.hpp"

#include <cmath>
#include <random>

#include "tsmux/error.hpp"

namespace tsmux {

ComplexityParams profile_params(ComplexityProfile profile) noexcept
{
    switch (profile) {
    case ComplexityProfile::Simple: return {1.0, 0.05, 0.85};
    case ComplexityProfile::Moderate: return {2.0, 0.12, 0.85};
    case ComplexityProfile::Complex: return {3.0, 0.22, 0.85};
    case ComplexityProfile::Sports: return {4.0, 0.40, 0.85};
    }
    return {};
}

std::string_view to_string(ComplexityProfile profile) noexcept
{
    switch (profile) {
    case ComplexityProfile::Simple: return "simple";
    case ComplexityProfile::Moderate: return "moderate";
    case ComplexityProfile::Complex: return "complex";
    case ComplexityProfile::Sports: return "sports";
    }
    return "simple";
}

std::optional<ComplexityProfile> parse_profile(std::string_view name) noexcept
{
    if (name == "simple")
        return ComplexityProfile::Simple;
    if (name == "moderate")
        return ComplexityProfile::Moderate;
    if (name == "complex")
        return ComplexityProfile::Complex;
    if (name == "sports")
        return ComplexityProfile::Sports;
    return std::nullopt;
}

std::vector<double> gen_complexity(std::uint64_t seed, std::size_t gops, const ComplexityParams& params)
{
    if (gops == 0)
        throw Error(ErrorCode::InvalidArgument, "complexity trace needs at least one GOP");
    if (!(params.mean > 0.0) || params.volatility < 0.0 || params.reversion < 0.0 || params.reversion >= 1.0)
        throw Error(ErrorCode::InvalidArgument, "complexity parameters out of range");
    if (params.volatility == 0.0)
        return std::vector<double>(gops, params.mean);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double phi = params.reversion;
    const double variance = params.volatility * params.volatility / (1.0 - phi * phi);
    double x = std::sqrt(variance) * normal(rng); // start in the stationary distribution
    std::vector<double> trace;
    trace.reserve(gops);
    for (std::size_t t = 0; t < gops; ++t) {
        if (t > 0)
            x = phi * x + params.volatility * normal(rng);
        trace.push_back(params.mean * std::exp(x - variance / 2.0));
    }
    return trace;
}

std::vector<double> gen_complexity(std::uint64_t seed, std::size_t gops, ComplexityProfile profile)
{
    return gen_complexity(seed, gops, profile_params(profile));
}

} // namespace tsmux
