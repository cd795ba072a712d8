#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsmux/analyzer.hpp"
#include "tsmux/packet.hpp"

namespace tsmux {

struct InsertionConfig {
    std::uint16_t program_number = 0;
    Pid data_pid;
    Pid pmt_pid;
    /// Share of input null packets always left untouched, in [0, 1).
    double reserve_fraction = 0.2;
    std::string service_label;
    /// Seconds between PMT repetitions for the new service.
    double pmt_interval = 0.5;
    /// Leading span during which PIDs are only observed, never substituted.
    double verification_seconds = 1.0;
    /// Stream rate assumed until two PCRs give a measurement.
    double nominal_rate = 38'000'000.0;
    /// Carousel mode: start over with chunk 0 once the payload has been sent.
    bool repeat_payload = false;
};

/// Throws InvalidArgument for reserved or colliding PIDs, program 0, or a
/// reserve fraction outside [0, 1).
void validate(const InsertionConfig& config);

/// Random-access byte source for the inserted payload.
class PayloadSource {
public:
    virtual ~PayloadSource() = default;
    virtual std::uint64_t size() const = 0;
    virtual std::uint32_t message_id() const = 0;
    /// Fills `out` with bytes starting at `offset`; the range lies within size().
    virtual void read(std::uint64_t offset, std::span<std::uint8_t> out) = 0;
};

class MemoryPayload final : public PayloadSource {
public:
    explicit MemoryPayload(std::vector<std::uint8_t> bytes);

    std::uint64_t size() const override { return bytes_.size(); }
    std::uint32_t message_id() const override { return message_id_; }
    void read(std::uint64_t offset, std::span<std::uint8_t> out) override;

private:
    std::vector<std::uint8_t> bytes_;
    std::uint32_t message_id_;
};

/// Reads chunks from disk on demand; the file is hashed once up front.
class FilePayload final : public PayloadSource {
public:
    explicit FilePayload(const std::filesystem::path& path);

    std::uint64_t size() const override { return size_; }
    std::uint32_t message_id() const override { return message_id_; }
    void read(std::uint64_t offset, std::span<std::uint8_t> out) override;

private:
    std::ifstream file_;
    std::uint64_t size_ = 0;
    std::uint32_t message_id_ = 0;
};

struct InsertionReport {
    std::uint64_t input_packets = 0;
    std::uint64_t null_packets_seen = 0;
    std::uint64_t packets_substituted = 0;
    std::uint64_t pat_packets_rewritten = 0;
    std::uint64_t pmt_packets_sent = 0;
    std::uint64_t chunk_packets_sent = 0;
    /// Distinct chunks fully written (repeats in carousel mode included).
    std::uint64_t chunks_sent = 0;
    std::uint32_t chunk_count = 0;
    /// Bits/second of DataChunk packets over the stream duration.
    double achieved_data_rate = 0.0;
    /// Null packets left in the output over all output packets.
    double residual_null_fraction = 0.0;
    double duration_seconds = 0.0;
    bool payload_complete = false;
    /// Set when not even one PMT could be sent.
    bool no_capacity = false;
};

/// Bits/second available to the new service: null bandwidth minus the
/// reserve, minus one PMT packet per `pmt_interval`. Throws NoCapacity when
/// nothing is left.
double plan_insertion(const MuxReport& report, double reserve_fraction, double pmt_interval = 0.5);

/// Single-pass null substitution. Every input packet yields exactly one
/// output packet: PAT packets are regenerated in place with the new program
/// appended, nulls may become PMT or DataChunk packets, and everything else
/// is copied unchanged. Packets with transport_error set are never modified.
///
/// Throws PidConflict, PatTooLarge or MultiSectionPat from process().
class Inserter {
public:
    Inserter(const InsertionConfig& config, PayloadSource& payload);
    ~Inserter();
    Inserter(const Inserter&) = delete;
    Inserter& operator=(const Inserter&) = delete;

    void process(const PacketBytes& in, PacketBytes& out);
    InsertionReport finish();

private:
    struct State;
    std::unique_ptr<State> state_;
};

InsertionReport insert(std::istream& in, std::ostream& out, const InsertionConfig& config, PayloadSource& payload);
std::vector<PacketBytes> insert(std::span<const PacketBytes> input, const InsertionConfig& config,
                                PayloadSource& payload, InsertionReport* report = nullptr);

} // namespace tsmux
