#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace tsmux {

enum class ComplexityProfile { Simple, Moderate, Complex, Sports };

/// Parameters of the mean-reverting lognormal walk behind a complexity trace:
/// log c_t = log(mean) + x_t - var/2, x_t = reversion * x_{t-1} + volatility * N(0,1).
struct ComplexityParams {
    double mean = 1.0;
    double volatility = 0.0;
    double reversion = 0.85;

    bool operator==(const ComplexityParams&) const = default;
};

ComplexityParams profile_params(ComplexityProfile profile) noexcept;
std::string_view to_string(ComplexityProfile profile) noexcept;
std::optional<ComplexityProfile> parse_profile(std::string_view name) noexcept;

/// Deterministic per seed. A zero volatility yields exactly `mean` at every GOP.
std::vector<double> gen_complexity(std::uint64_t seed, std::size_t gops, const ComplexityParams& params);
std::vector<double> gen_complexity(std::uint64_t seed, std::size_t gops, ComplexityProfile profile);

} // namespace tsmux
