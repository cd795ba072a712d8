#include "tsmux/tables.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace tsmux {

namespace {

constexpr std::uint8_t kServiceDescriptorTag = 0x48;

std::uint16_t read_u16(const std::vector<std::uint8_t>& b, std::size_t pos)
{
    return static_cast<std::uint16_t>((b[pos] << 8) | b[pos + 1]);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

/// 13-bit PID preceded by three reserved '1' bits.
void put_pid(std::vector<std::uint8_t>& out, Pid pid)
{
    put_u16(out, static_cast<std::uint16_t>(0xE000 | pid.value()));
}

/// 12-bit loop length preceded by four reserved '1' bits.
void put_loop(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& loop)
{
    if (loop.size() > 0x3FF)
        throw Error(ErrorCode::MalformedBody, "descriptor loop exceeds 1023 bytes");
    put_u16(out, static_cast<std::uint16_t>(0xF000 | loop.size()));
    out.insert(out.end(), loop.begin(), loop.end());
}

Pid read_pid(const std::vector<std::uint8_t>& b, std::size_t pos)
{
    return Pid{static_cast<std::uint16_t>(read_u16(b, pos) & 0x1FFF)};
}

std::size_t read_length12(const std::vector<std::uint8_t>& b, std::size_t pos)
{
    return read_u16(b, pos) & 0x0FFF;
}

void require_table(const Section& s, std::uint8_t table_id, const char* name)
{
    if (s.table_id != table_id)
        throw Error(ErrorCode::WrongTableId, std::string(name) + " expects table_id " + std::to_string(table_id) + ", got "
                                                 + std::to_string(s.table_id));
    if (!s.section_syntax)
        throw Error(ErrorCode::MalformedBody, std::string(name) + " must use the long section syntax");
}

} // namespace

Pat parse_pat(const Section& section)
{
    require_table(section, kPatTableId, "PAT");
    const auto& b = section.body;
    if (b.size() % 4 != 0)
        throw Error(ErrorCode::MalformedBody, "PAT body length is not a multiple of 4");
    Pat pat;
    pat.transport_stream_id = section.table_id_extension;
    pat.version = section.version;
    std::set<std::uint16_t> seen;
    for (std::size_t pos = 0; pos < b.size(); pos += 4) {
        PatEntry entry{read_u16(b, pos), read_pid(b, pos + 2)};
        if (!seen.insert(entry.program_number).second)
            throw Error(ErrorCode::MalformedBody, "duplicate program_number " + std::to_string(entry.program_number));
        pat.programs.push_back(entry);
    }
    return pat;
}

Section serialize_pat(const Pat& pat)
{
    Section s;
    s.table_id = kPatTableId;
    s.table_id_extension = pat.transport_stream_id;
    s.version = pat.version & 0x1F;
    std::set<std::uint16_t> seen;
    for (const auto& entry : pat.programs) {
        if (!seen.insert(entry.program_number).second)
            throw Error(ErrorCode::MalformedBody, "duplicate program_number " + std::to_string(entry.program_number));
        put_u16(s.body, entry.program_number);
        put_pid(s.body, entry.pid);
    }
    seal(s);
    return s;
}

Pmt parse_pmt(const Section& section)
{
    require_table(section, kPmtTableId, "PMT");
    const auto& b = section.body;
    if (b.size() < 4)
        throw Error(ErrorCode::MalformedBody, "PMT body shorter than its fixed header");
    Pmt pmt;
    pmt.program_number = section.table_id_extension;
    pmt.version = section.version;
    pmt.pcr_pid = read_pid(b, 0);
    const std::size_t info_length = read_length12(b, 2);
    std::size_t pos = 4;
    if (pos + info_length > b.size())
        throw Error(ErrorCode::MalformedBody, "program_info_length overruns the section");
    pmt.program_info.assign(b.begin() + 4, b.begin() + static_cast<std::ptrdiff_t>(4 + info_length));
    pos += info_length;

    std::set<std::uint16_t> pids;
    while (pos < b.size()) {
        if (pos + 5 > b.size())
            throw Error(ErrorCode::MalformedBody, "truncated elementary stream entry");
        PmtStream es;
        es.stream_type = b[pos];
        es.elementary_pid = read_pid(b, pos + 1);
        const std::size_t es_length = read_length12(b, pos + 3);
        pos += 5;
        if (pos + es_length > b.size())
            throw Error(ErrorCode::MalformedBody, "ES_info_length overruns the section");
        es.es_info.assign(b.begin() + static_cast<std::ptrdiff_t>(pos), b.begin() + static_cast<std::ptrdiff_t>(pos + es_length));
        pos += es_length;
        if (!pids.insert(es.elementary_pid.value()).second)
            throw Error(ErrorCode::MalformedBody, "duplicate elementary PID");
        pmt.streams.push_back(std::move(es));
    }
    return pmt;
}

Section serialize_pmt(const Pmt& pmt)
{
    Section s;
    s.table_id = kPmtTableId;
    s.table_id_extension = pmt.program_number;
    s.version = pmt.version & 0x1F;
    put_pid(s.body, pmt.pcr_pid);
    put_loop(s.body, pmt.program_info);
    std::set<std::uint16_t> pids;
    for (const auto& es : pmt.streams) {
        if (!pids.insert(es.elementary_pid.value()).second)
            throw Error(ErrorCode::MalformedBody, "duplicate elementary PID");
        s.body.push_back(es.stream_type);
        put_pid(s.body, es.elementary_pid);
        put_loop(s.body, es.es_info);
    }
    seal(s);
    return s;
}

Sdt parse_sdt(const Section& section)
{
    require_table(section, kSdtActualTableId, "SDT");
    const auto& b = section.body;
    if (b.size() < 3)
        throw Error(ErrorCode::MalformedBody, "SDT body shorter than its fixed header");
    Sdt sdt;
    sdt.transport_stream_id = section.table_id_extension;
    sdt.version = section.version;
    sdt.original_network_id = read_u16(b, 0);
    std::size_t pos = 3;
    while (pos + 5 <= b.size()) {
        SdtService service;
        service.service_id = read_u16(b, pos);
        const std::size_t loop_length = read_length12(b, pos + 3);
        pos += 5;
        const std::size_t end = pos + loop_length;
        if (end > b.size())
            throw Error(ErrorCode::MalformedBody, "descriptors_loop_length overruns the section");
        while (pos + 2 <= end) {
            const std::uint8_t tag = b[pos];
            const std::size_t length = b[pos + 1];
            const std::size_t start = pos + 2;
            if (start + length > end)
                throw Error(ErrorCode::MalformedBody, "descriptor overruns its loop");
            if (tag == kServiceDescriptorTag && length >= 3) {
                service.service_type = b[start];
                const std::size_t provider_len = b[start + 1];
                if (start + 2 + provider_len + 1 <= start + length) {
                    service.provider.assign(b.begin() + static_cast<std::ptrdiff_t>(start + 2),
                                            b.begin() + static_cast<std::ptrdiff_t>(start + 2 + provider_len));
                    const std::size_t name_pos = start + 2 + provider_len;
                    const std::size_t name_len = std::min<std::size_t>(b[name_pos], start + length - name_pos - 1);
                    service.name.assign(b.begin() + static_cast<std::ptrdiff_t>(name_pos + 1),
                                        b.begin() + static_cast<std::ptrdiff_t>(name_pos + 1 + name_len));
                }
            }
            pos = start + length;
        }
        pos = end;
        sdt.services.push_back(std::move(service));
    }
    return sdt;
}

Section serialize_sdt(const Sdt& sdt)
{
    Section s;
    s.table_id = kSdtActualTableId;
    s.table_id_extension = sdt.transport_stream_id;
    s.version = sdt.version & 0x1F;
    put_u16(s.body, sdt.original_network_id);
    s.body.push_back(0xFF);
    for (const auto& service : sdt.services) {
        if (service.provider.size() > 0xFF || service.name.size() > 0xFF)
            throw Error(ErrorCode::MalformedBody, "service name too long");
        std::vector<std::uint8_t> descriptor{kServiceDescriptorTag, 0, service.service_type,
                                             static_cast<std::uint8_t>(service.provider.size())};
        descriptor.insert(descriptor.end(), service.provider.begin(), service.provider.end());
        descriptor.push_back(static_cast<std::uint8_t>(service.name.size()));
        descriptor.insert(descriptor.end(), service.name.begin(), service.name.end());
        if (descriptor.size() - 2 > 0xFF)
            throw Error(ErrorCode::MalformedBody, "service descriptor too long");
        descriptor[1] = static_cast<std::uint8_t>(descriptor.size() - 2);

        put_u16(s.body, service.service_id);
        s.body.push_back(0xFC); // reserved, no EIT flags
        // running_status = 4 (running), free_CA_mode = 0
        put_u16(s.body, static_cast<std::uint16_t>((4 << 13) | descriptor.size()));
        s.body.insert(s.body.end(), descriptor.begin(), descriptor.end());
    }
    seal(s);
    return s;
}

} // namespace tsmux
