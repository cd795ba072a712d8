#pragma once

// Independent oracles and fixture builders shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tsmux/generator.hpp"
#include "tsmux/packet.hpp"

namespace tsmux::test {

/// Bit-at-a-time CRC-32/MPEG-2 by polynomial long division.
inline std::uint32_t crc32_bitwise(std::span<const std::uint8_t> data)
{
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t byte : data) {
        for (int bit = 7; bit >= 0; --bit) {
            const bool in = ((byte >> bit) & 1u) != 0;
            const bool top = (crc & 0x80000000u) != 0;
            crc <<= 1;
            if (in != top)
                crc ^= 0x04C11DB7u;
        }
    }
    return crc;
}

/// A structurally valid packet with every field drawn at random.
inline TsPacket random_packet(std::mt19937_64& rng)
{
    auto uniform = [&](std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
    };
    TsPacket p;
    p.pid = Pid(static_cast<std::uint16_t>(uniform(0, 0x1FFF)));
    p.transport_error = uniform(0, 1) != 0;
    p.payload_unit_start = uniform(0, 1) != 0;
    p.priority = uniform(0, 1) != 0;
    p.scrambling = static_cast<std::uint8_t>(uniform(0, 3));
    p.adaptation_control = static_cast<AdaptationControl>(uniform(1, 3));
    p.continuity_counter = static_cast<std::uint8_t>(uniform(0, 15));

    std::size_t af_length = 0;
    if (p.adaptation_control == AdaptationControl::AdaptationOnly)
        af_length = 183;
    else if (p.adaptation_control == AdaptationControl::AdaptationAndPayload)
        af_length = uniform(0, 182);

    if (p.adaptation_control != AdaptationControl::PayloadOnly) {
        AdaptationField af;
        if (af_length == 0) {
            af.zero_length = true;
        } else {
            af.discontinuity = uniform(0, 1) != 0;
            af.random_access = uniform(0, 1) != 0;
            af.es_priority = uniform(0, 1) != 0;
            std::size_t left = af_length - 1;
            if (left >= 6 && uniform(0, 1) != 0) {
                Pcr pcr;
                pcr.base = uniform(0, Pcr::kBaseModulus - 1);
                pcr.extension = static_cast<std::uint16_t>(uniform(0, 299));
                pcr.reserved = static_cast<std::uint8_t>(uniform(0, 0x3F));
                af.pcr = pcr;
                left -= 6;
            }
            if (left > 0 && uniform(0, 1) != 0) {
                af.other_flags = static_cast<std::uint8_t>(uniform(1, 15));
                af.extra.resize(left);
                for (auto& b : af.extra)
                    b = static_cast<std::uint8_t>(uniform(0, 255));
            } else {
                af.stuffing = left;
            }
        }
        p.adaptation = af;
    }
    const std::size_t payload_size = p.adaptation_control == AdaptationControl::PayloadOnly ? 184
        : p.adaptation_control == AdaptationControl::AdaptationOnly                        ? 0
                                                                                            : 183 - af_length;
    p.payload.resize(payload_size);
    for (auto& b : p.payload)
        b = static_cast<std::uint8_t>(uniform(0, 255));
    return p;
}

/// Lowest maximum distortion reachable when every rate sits on a grid of
/// `step` and within its bounds, with the rates summing to at most `budget`.
/// Bounds are expected on the grid. Returns +inf when even the minimum rates
/// do not fit.
inline double grid_min_max_distortion(std::span<const double> c, double budget, std::span<const double> lo,
                                      std::span<const double> hi, double step)
{
    const std::size_t n = c.size();
    std::vector<double> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        const auto first = static_cast<long long>(std::llround(lo[i] / step));
        const auto last = static_cast<long long>(std::llround(hi[i] / step));
        for (long long k = std::max(first, 1LL); k <= last; ++k)
            candidates.push_back(c[i] / (static_cast<double>(k) * step));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Smallest grid rate of service i meeting distortion level d, or -1 if none does.
    const auto rate_for = [&](std::size_t i, double d) {
        const auto first = std::max(std::llround(lo[i] / step), 1LL);
        const auto last = std::llround(hi[i] / step);
        auto k = static_cast<long long>(std::ceil(c[i] / d / step - 1e-9));
        k = std::max(k, first);
        while (k > first && c[i] / (static_cast<double>(k - 1) * step) <= d)
            --k;
        while (k <= last && c[i] / (static_cast<double>(k) * step) > d)
            ++k;
        return k <= last ? static_cast<double>(k) * step : -1.0;
    };

    for (double d : candidates) {
        double total = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const double r = rate_for(i, d);
            ok = r >= 0.0;
            total += r;
        }
        if (ok && total <= budget + step * 1e-6)
            return d;
    }
    return std::numeric_limits<double>::infinity();
}

inline ServiceConfig make_service(std::uint16_t id, RateMode mode, double min_rate, double max_rate,
                                  ComplexityParams complexity, std::string name = {})
{
    ServiceConfig s;
    s.encoder.service_id = id;
    s.encoder.mode = mode;
    s.encoder.min_rate = min_rate;
    s.encoder.max_rate = max_rate;
    s.encoder.pid = Pid(static_cast<std::uint16_t>(0x100 + id));
    s.pmt_pid = Pid(static_cast<std::uint16_t>(0x1000 + id));
    s.complexity = complexity;
    s.name = std::move(name);
    return s;
}

/// `count` closed-loop ABR services sharing the channel, leaving roughly
/// `null_share` of it to null packets.
inline MuxConfig statmux_scenario(double channel_rate, std::size_t count, double null_share, std::uint64_t seed,
                                  ComplexityParams complexity = profile_params(ComplexityProfile::Sports))
{
    MuxConfig config;
    config.channel_rate = channel_rate;
    config.seed = seed;
    config.null_reserve_rate = channel_rate * null_share;
    const double share = channel_rate * (1.0 - null_share) / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i)
        config.services.push_back(make_service(static_cast<std::uint16_t>(i + 1), RateMode::Abr, share * 0.2,
                                               share * 2.5, complexity, "svc" + std::to_string(i + 1)));
    return config;
}

/// Nine services with the video bounds of a 38 Mbit/s DVB-S Sky bouquet.
/// The zero minimum of one channel is raised to 0.1 Mbit/s.
inline MuxConfig sky_bouquet(std::uint64_t seed)
{
    struct Row {
        const char* name;
        double max_mbps;
        double min_mbps;
        ComplexityProfile profile;
    };
    const Row rows[] = {
        {"NatGeoWild", 3.5, 1.0, ComplexityProfile::Moderate},
        {"Nat. Geographic", 3.5, 0.1, ComplexityProfile::Moderate},
        {"Discovery", 3.5, 1.2, ComplexityProfile::Moderate},
        {"Sky Select", 5.2, 1.8, ComplexityProfile::Complex},
        {"Spiegel Geschichte", 5.8, 0.6, ComplexityProfile::Moderate},
        {"Sky Sports 1", 7.8, 3.8, ComplexityProfile::Sports},
        {"Sky Sports 2", 4.6, 1.4, ComplexityProfile::Sports},
        {"Sky Bundesliga", 10.0, 3.0, ComplexityProfile::Sports},
        {"Blue Movie", 5.0, 0.6, ComplexityProfile::Complex},
    };
    MuxConfig config;
    config.channel_rate = 38e6;
    config.seed = seed;
    std::uint16_t id = 1;
    for (const auto& row : rows) {
        config.services.push_back(make_service(id, RateMode::Abr, row.min_mbps * 1e6, row.max_mbps * 1e6,
                                               profile_params(row.profile), row.name));
        ++id;
    }
    return config;
}

} // namespace tsmux::test
