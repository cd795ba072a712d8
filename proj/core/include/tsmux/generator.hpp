#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsmux/complexity.hpp"
#include "tsmux/encoder.hpp"
#include "tsmux/stream_io.hpp"

namespace tsmux {

struct ServiceConfig {
    /// When `encoder.complexity_trace` is empty a trace is drawn from `complexity`;
    /// a supplied trace shorter than the run is cycled.
    EncoderModel encoder;
    ComplexityParams complexity;
    Pid pmt_pid;
    /// Announced through the SDT when non-empty.
    std::string name;
};

struct MuxConfig {
    double channel_rate = 0.0; // bits/second
    double gop_duration = 0.5; // seconds
    std::vector<ServiceConfig> services;
    double psi_interval = 0.1; // seconds between PAT/PMT/SDT repetitions
    double pcr_interval = 0.04; // seconds between PCRs on each service PID
    std::uint64_t seed = 1;
    /// Bandwidth held back from the allocator and left as null packets.
    double null_reserve_rate = 0.0;
    std::uint16_t transport_stream_id = 1;
};

/// Throws InvalidArgument for malformed fields or colliding PIDs, and
/// Infeasible when PSI + reserve + sum(min) + CBR rates do not fit the channel.
void validate(const MuxConfig& config);

/// Packets emitted per PSI repetition (PAT, one PMT per service, SDT if any names).
std::size_t psi_packets_per_repetition(const MuxConfig& config);
/// Average PSI bitrate.
double psi_rate(const MuxConfig& config);

struct GopRecord {
    std::size_t slots = 0;        // packets in this GOP
    std::size_t psi_packets = 0;
    std::size_t null_packets = 0;
    std::vector<double> rates;    // per service, bits/second, after encoder modelling
    std::vector<std::size_t> packets; // per service
};

struct GenerationSummary {
    std::uint64_t packets = 0;
    std::vector<GopRecord> gops;

    /// Time-weighted mean of the modelled rate of service `index`.
    double mean_rate(std::size_t index) const;
};

/// Emits a constant-rate multiplex: each GOP runs the equal-distortion
/// allocator over the non-CBR services (closed loop), converts rates into
/// packet counts, interleaves them evenly with PSI repetitions and fills the
/// remaining slots with null packets. Output is byte-identical per seed.
GenerationSummary generate_stream(const MuxConfig& config, double duration_seconds, const PacketCallback& sink);

std::vector<PacketBytes> generate_packets(const MuxConfig& config, double duration_seconds,
                                          GenerationSummary* summary = nullptr);

} // namespace tsmux
