#include <random>

#include "doctest.h"
#include "support.hpp"
#include "tsmux/packet.hpp"
#include "tsmux/stream_io.hpp"

using namespace tsmux;

TEST_CASE("random packets survive serialize/parse unchanged")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        const TsPacket packet = test::random_packet(rng);
        const PacketBytes bytes = serialize_packet(packet);
        REQUIRE(parse_packet(bytes) == packet);
        REQUIRE(serialize_packet(parse_packet(bytes)) == bytes);
    }
}

TEST_CASE("header fields sit at their ISO 13818-1 bit positions")
{
    TsPacket p;
    p.pid = Pid(0x1ABC);
    p.transport_error = true;
    p.payload_unit_start = true;
    p.priority = false;
    p.scrambling = 2;
    p.continuity_counter = 9;
    p.payload.assign(184, 0x55);
    const auto b = serialize_packet(p);
    CHECK(b[0] == 0x47);
    CHECK(b[1] == (0x80 | 0x40 | 0x1A));
    CHECK(b[2] == 0xBC);
    CHECK(b[3] == ((2 << 6) | (1 << 4) | 9));

    const PacketView view(b);
    CHECK(view.pid_value() == 0x1ABC);
    CHECK(view.transport_error());
    CHECK(view.payload_unit_start());
    CHECK(view.scrambling() == 2);
    CHECK(view.continuity_counter() == 9);
    CHECK(view.payload().size() == 184);
    CHECK_FALSE(view.pcr().has_value());
}

TEST_CASE("PCR layout: 33-bit base, 6 reserved bits, 9-bit extension")
{
    Pcr pcr;
    pcr.base = 0x1'2345'6789ull;
    pcr.extension = 0x1A5;
    const std::vector<std::uint8_t> payload(176, 0);
    const auto bytes = serialize_packet(make_payload_packet(Pid(0x100), 0, false, payload, pcr));
    CHECK(bytes[4] == 7);
    CHECK(bytes[5] == 0x10);
    // base bits 32..1 in bytes 6..9, bit 0 then reserved then extension bit 8 in byte 10
    CHECK(bytes[6] == 0x91);
    CHECK(bytes[7] == 0xA2);
    CHECK(bytes[8] == 0xB3);
    CHECK(bytes[9] == 0xC4);
    CHECK(bytes[10] == (0x80 | 0x7E | 0x01));
    CHECK(bytes[11] == 0xA5);
    const auto parsed = PacketView(bytes).pcr();
    REQUIRE(parsed.has_value());
    CHECK(parsed->base == pcr.base);
    CHECK(parsed->extension == pcr.extension);
    CHECK(parsed->ticks() == pcr.base * 300 + pcr.extension);
}

TEST_CASE("PCR tick arithmetic wraps modulo 2^33 * 300")
{
    CHECK(Pcr::from_ticks(27'000'000).base == 90'000);
    CHECK(Pcr::from_ticks(27'000'001).extension == 1);
    const std::uint64_t near_wrap = Pcr::kWrapTicks - 100;
    CHECK(pcr_delta(near_wrap, 50) == 150);
    CHECK(pcr_delta(50, near_wrap) == -150);
    CHECK(pcr_before(near_wrap, 50));
    CHECK_FALSE(pcr_before(50, near_wrap));
}

TEST_CASE("parse errors")
{
    PacketBytes b = serialize_packet(make_null_packet());
    SUBCASE("bad sync")
    {
        b[0] = 0x48;
        CHECK_THROWS_AS(parse_packet(b), Error);
        try {
            parse_packet(b);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BadSync);
        }
    }
    SUBCASE("adaptation length out of range")
    {
        b[3] = 0x30;
        b[4] = 184;
        try {
            parse_packet(b);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BadAdaptationLength);
        }
    }
    SUBCASE("adaptation-only packet must fill the body")
    {
        b[3] = 0x20;
        b[4] = 100;
        try {
            parse_packet(b);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BadAdaptationLength);
        }
    }
    SUBCASE("short buffer")
    {
        try {
            parse_packet(std::span<const std::uint8_t>(b.data(), 100));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedPacket);
        }
    }
}

TEST_CASE("serialize rejects payloads that do not fill the packet exactly")
{
    TsPacket p;
    p.pid = Pid(0x20);
    p.payload.assign(185, 0);
    CHECK_THROWS_AS(serialize_packet(p), Error);
    p.payload.assign(100, 0);
    CHECK_THROWS_AS(serialize_packet(p), Error);
}

TEST_CASE("PID range is enforced")
{
    CHECK_THROWS_AS(Pid(0x2000), Error);
    CHECK(Pid(0x1FFF) == kNullPid);
}

TEST_CASE("make_payload_packet stuffs short payloads")
{
    const std::vector<std::uint8_t> one(183, 1);
    const auto p1 = make_payload_packet(Pid(5), 0, true, one);
    REQUIRE(p1.adaptation.has_value());
    CHECK(p1.adaptation->zero_length);
    CHECK(parse_packet(serialize_packet(p1)) == p1);

    const std::vector<std::uint8_t> small(10, 2);
    const auto p2 = make_payload_packet(Pid(5), 3, false, small);
    CHECK(p2.adaptation->stuffing == 183 - 1 - 10);
    const auto bytes = serialize_packet(p2);
    CHECK(PacketView(bytes).payload().size() == 10);
}

TEST_CASE("null packets")
{
    const auto n = make_null_packet(4);
    CHECK(is_null(n));
    const auto b = serialize_packet(n);
    CHECK(PacketView(b).is_null());
    CHECK(std::all_of(b.begin() + 4, b.end(), [](std::uint8_t x) { return x == 0xFF; }));
}

TEST_CASE("sync_scan needs five aligned sync bytes")
{
    std::vector<std::uint8_t> bytes(7, 0x47); // decoys
    const auto packet = serialize_packet(make_null_packet());
    for (int i = 0; i < 6; ++i)
        bytes.insert(bytes.end(), packet.begin(), packet.end());
    CHECK(sync_scan(bytes) == std::optional<std::size_t>(7));
    CHECK_FALSE(sync_scan(std::span<const std::uint8_t>(bytes.data(), 7 + 188 * 4)).has_value());
    CHECK(sync_scan(std::span<const std::uint8_t>(bytes.data(), 7 + 188 * 4), 4) == std::optional<std::size_t>(7));
}

TEST_CASE("framer skips junk, resyncs and emits aligned packets")
{
    std::vector<PacketBytes> packets;
    for (std::uint8_t cc = 0; cc < 12; ++cc)
        packets.push_back(serialize_packet(make_null_packet(cc)));
    std::vector<std::uint8_t> bytes = {1, 2, 3};
    for (std::size_t i = 0; i < packets.size(); ++i) {
        if (i == 6)
            bytes.insert(bytes.end(), {9, 9, 9, 9, 9});
        bytes.insert(bytes.end(), packets[i].begin(), packets[i].end());
    }

    SUBCASE("whole buffer")
    {
        const auto out = packets_from_bytes(bytes);
        CHECK(out == packets);
    }
    SUBCASE("byte-by-byte pushes")
    {
        PacketFramer framer;
        std::vector<PacketBytes> out;
        const PacketCallback sink = [&](const PacketBytes& p) { out.push_back(p); };
        for (auto b : bytes)
            framer.push(std::span<const std::uint8_t>(&b, 1), sink);
        framer.finish(sink);
        CHECK(out == packets);
        CHECK(framer.bytes_skipped() == 8);
    }
}

TEST_CASE("framer accepts streams shorter than the lock count")
{
    const auto p = serialize_packet(make_null_packet());
    const std::vector<std::uint8_t> bytes(p.begin(), p.end());
    CHECK(packets_from_bytes(bytes).size() == 1);
    CHECK(packets_from_bytes({}).empty());
}
