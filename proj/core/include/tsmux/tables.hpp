#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsmux/packet.hpp"
#include "tsmux/section.hpp"

namespace tsmux {

inline constexpr std::uint8_t kPatTableId = 0x00;
inline constexpr std::uint8_t kPmtTableId = 0x02;
inline constexpr std::uint8_t kSdtActualTableId = 0x42;

struct PatEntry {
    /// 0 designates the network PID entry, which is kept but is not a program.
    std::uint16_t program_number = 0;
    Pid pid;

    bool operator==(const PatEntry&) const = default;
};

struct Pat {
    std::uint16_t transport_stream_id = 0;
    std::uint8_t version = 0;
    std::vector<PatEntry> programs;

    bool operator==(const Pat&) const = default;
};

Pat parse_pat(const Section& section);
Section serialize_pat(const Pat& pat);

struct PmtStream {
    std::uint8_t stream_type = 0;
    Pid elementary_pid;
    std::vector<std::uint8_t> es_info; // opaque descriptor loop

    bool operator==(const PmtStream&) const = default;
};

struct Pmt {
    std::uint16_t program_number = 0;
    std::uint8_t version = 0;
    Pid pcr_pid = kNullPid; // 0x1FFF: program carries no PCR
    std::vector<std::uint8_t> program_info; // opaque descriptor loop
    std::vector<PmtStream> streams;

    bool operator==(const Pmt&) const = default;
};

Pmt parse_pmt(const Section& section);
Section serialize_pmt(const Pmt& pmt);

/// Service entry of an SDT, reduced to what the CLI displays.
struct SdtService {
    std::uint16_t service_id = 0;
    std::uint8_t service_type = 0;
    std::string provider;
    std::string name;

    bool operator==(const SdtService&) const = default;
};

struct Sdt {
    std::uint16_t transport_stream_id = 0;
    std::uint16_t original_network_id = 0;
    std::uint8_t version = 0;
    std::vector<SdtService> services;

    bool operator==(const Sdt&) const = default;
};

/// Extracts service names (service_descriptor 0x48); other descriptors are skipped.
Sdt parse_sdt(const Section& section);
/// Used by the stream generator to label synthetic services.
Section serialize_sdt(const Sdt& sdt);

} // namespace tsmux
