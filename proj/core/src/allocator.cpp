#include "tsmux/allocator.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tsmux/error.hpp"

namespace tsmux {

AllocationResult allocate_equal_distortion(std::span<const double> complexity, double budget,
                                           std::span<const double> min_rates, std::span<const double> max_rates)
{
    const std::size_t n = complexity.size();
    if (min_rates.size() != n || max_rates.size() != n)
        throw Error(ErrorCode::InvalidArgument, "complexity and bound vectors differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(complexity[i] > 0.0) || !std::isfinite(complexity[i]))
            throw Error(ErrorCode::InvalidArgument, "complexity must be positive and finite");
        if (min_rates[i] < 0.0 || min_rates[i] > max_rates[i])
            throw Error(ErrorCode::InvalidArgument, "service " + std::to_string(i) + " has min > max");
    }
    const double min_total = std::accumulate(min_rates.begin(), min_rates.end(), 0.0);
    if (min_total > budget * (1.0 + 1e-12))
        throw Error(ErrorCode::Infeasible, "sum of minimum rates exceeds the budget");

    AllocationResult result;
    result.budget = budget;
    result.rates.assign(n, 0.0);
    result.clipped.assign(n, false);
    std::vector<bool> pinned(n, false);
    std::vector<double> proposal(n, 0.0);

    for (std::size_t round = 0; round <= n; ++round) {
        double remaining = budget;
        double free_complexity = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned[i])
                remaining -= result.rates[i];
            else
                free_complexity += complexity[i];
        }
        if (free_complexity == 0.0)
            break;
        remaining = std::max(remaining, 0.0);

        double over = 0.0;
        double under = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned[i])
                continue;
            proposal[i] = remaining * complexity[i] / free_complexity;
            if (proposal[i] > max_rates[i])
                over += proposal[i] - max_rates[i];
            else if (proposal[i] < min_rates[i])
                under += min_rates[i] - proposal[i];
        }
        if (over == 0.0 && under == 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                if (!pinned[i])
                    result.rates[i] = proposal[i];
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned[i])
                continue;
            if (over >= under && proposal[i] > max_rates[i]) {
                pinned[i] = true;
                result.rates[i] = max_rates[i];
            } else if (under >= over && proposal[i] < min_rates[i]) {
                pinned[i] = true;
                result.rates[i] = min_rates[i];
            }
        }
    }

    double used = 0.0;
    result.distortions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.clipped[i] = pinned[i];
        result.distortions[i] = complexity[i] / result.rates[i];
        used += result.rates[i];
    }
    result.residual = std::max(0.0, budget - used);
    return result;
}

} // namespace tsmux
