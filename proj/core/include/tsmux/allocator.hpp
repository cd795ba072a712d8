#pragma once

#include <span>
#include <vector>

namespace tsmux {

struct AllocationResult {
    /// Rate per service, bits/second.
    std::vector<double> rates;
    /// Model distortion c_i / R_i.
    std::vector<double> distortions;
    /// True where the rate sits on its min or max bound.
    std::vector<bool> clipped;
    double budget = 0.0;
    /// budget - sum(rates), left to null stuffing.
    double residual = 0.0;
};

/// Equal-distortion bandwidth allocation under the hyperbolic model D = c / R.
/// Without bounds the answer is R_i = budget * c_i / sum(c). Bounds are
/// enforced by iterative clipping: the side (over-max or under-min) with the
/// larger total violation is pinned, the rest re-shares the remaining budget,
/// until no proposal violates its bounds. Unclipped services end with equal
/// distortion. Use +infinity for an absent maximum.
///
/// Throws Infeasible when sum(min) > budget, InvalidArgument on mismatched
/// sizes, non-positive complexity or min > max.
AllocationResult allocate_equal_distortion(std::span<const double> complexity, double budget,
                                           std::span<const double> min_rates, std::span<const double> max_rates);

} // namespace tsmux
