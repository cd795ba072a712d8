#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "tsmux/analyzer.hpp"
#include "tsmux/report_export.hpp"
#include "tsmux/stream_io.hpp"

using namespace tsmux;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args, const std::string& stdin_data = {})
{
    std::istringstream in(stdin_data);
    std::ostringstream out, err;
    const int code = cli::run(args, in, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("tsmux_cli_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string slurp(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data)
{
    std::ofstream f(path, std::ios::binary);
    f << data;
}

const char* kScenario = R"({
  "channel_rate": "12M",
  "null_reserve_rate": "3M",
  "seed": 5,
  "services": [
    {"service_id": 1, "name": "Alpha", "pid": 256, "pmt_pid": "0x1000", "mode": "abr",
     "min_rate": "1M", "max_rate": "6M", "profile": "sports"},
    {"service_id": 2, "name": "Beta", "pid": "0x101", "pmt_pid": 4097, "mode": "capped-vbr",
     "min_rate": "1M", "max_rate": "4M", "complexity": {"mean": 2.0, "volatility": 0.2}},
    {"service_id": 3, "pid": 258, "pmt_pid": 4098, "mode": "cbr", "max_rate": "1.5M"}
  ]
})";

} // namespace

TEST_CASE("rate and PID parsing")
{
    CHECK(cli::parse_rate("38M") == 38'000'000);
    CHECK(cli::parse_rate("1.5M") == 1'500'000);
    CHECK(cli::parse_rate("500k") == 500'000);
    CHECK(cli::parse_rate("1234") == 1234);
    CHECK_THROWS_AS(cli::parse_rate("fast"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_rate(""), cli::UsageError);
    CHECK(cli::parse_pid("0x1FFF") == kNullPid);
    CHECK(cli::parse_pid("256") == Pid(256));
    CHECK_THROWS_AS(cli::parse_pid("0x2000"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_pid("12a"), cli::UsageError);
}

TEST_CASE("scenario parsing covers every service field")
{
    const auto config = cli::parse_scenario(kScenario);
    CHECK(config.channel_rate == 12e6);
    CHECK(config.null_reserve_rate == 3e6);
    CHECK(config.seed == 5);
    REQUIRE(config.services.size() == 3);
    CHECK(config.services[0].name == "Alpha");
    CHECK(config.services[0].pmt_pid == Pid(0x1000));
    CHECK(config.services[1].encoder.mode == RateMode::CappedVbr);
    CHECK(config.services[1].complexity.volatility == 0.2);
    CHECK(config.services[2].encoder.min_rate == 1.5e6);
    CHECK_THROWS_AS(cli::parse_scenario("{\"services\": []}"), Error);
    CHECK_THROWS_AS(cli::parse_scenario("[1,2]"), Error);
}

TEST_CASE("generate is deterministic and infeasible scenarios fail cleanly")
{
    TempDir dir;
    write_file(dir.file("s.json"), kScenario);
    REQUIRE(run({"generate", dir.file("s.json"), "--duration", "2", "-o", dir.file("a.ts")}).code == 0);
    REQUIRE(run({"generate", dir.file("s.json"), "--duration", "2", "-o", dir.file("b.ts")}).code == 0);
    CHECK(slurp(dir.file("a.ts")) == slurp(dir.file("b.ts")));
    CHECK(slurp(dir.file("a.ts")).size() == static_cast<std::size_t>(12e6 * 2 / 1504) * 188);
    REQUIRE(run({"generate", dir.file("s.json"), "--duration", "2", "--seed", "6", "-o", dir.file("c.ts")}).code == 0);
    CHECK(slurp(dir.file("a.ts")) != slurp(dir.file("c.ts")));

    std::string infeasible = kScenario;
    infeasible.replace(infeasible.find("\"3M\""), 4, "\"11M\"");
    write_file(dir.file("bad.json"), infeasible);
    const auto r = run({"generate", dir.file("bad.json"), "-o", dir.file("bad.ts")});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("infeasible") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.file("bad.ts")));
    CHECK_FALSE(fs::exists(dir.file("bad.ts.partial")));
}

TEST_CASE("analyze JSON equals the in-memory report")
{
    TempDir dir;
    write_file(dir.file("s.json"), kScenario);
    REQUIRE(run({"generate", dir.file("s.json"), "--duration", "3", "-o", dir.file("a.ts")}).code == 0);
    const auto r = run({"analyze", dir.file("a.ts"), "--format", "json"});
    REQUIRE(r.code == 0);
    std::ifstream f(dir.file("a.ts"), std::ios::binary);
    const auto packets = read_packets(f);
    CHECK(report_from_json(r.out) == measure(packets, AnalyzerOptions{}));

    const auto text = run({"analyze", dir.file("a.ts"), "--capacity", "12M"});
    CHECK(text.code == 0);
    CHECK(text.out.find("Alpha") != std::string::npos);
    CHECK(text.out.find("Difference") != std::string::npos);

    for (const char* format : {"csv", "svg"}) {
        const auto out = dir.file(std::string("r.") + format);
        CHECK(run({"analyze", dir.file("a.ts"), "--format", format, "--window", "0.25", "-o", out}).code == 0);
        CHECK(fs::file_size(out) > 0);
    }
    CHECK(run({"analyze", dir.file("a.ts"), "--clock", "pcr:256"}).code == 0);
    CHECK(run({"analyze", dir.file("a.ts"), "--clock", "nominal:12M", "--averaging"}).code == 0);
}

TEST_CASE("analyze failures")
{
    TempDir dir;
    write_file(dir.file("empty.ts"), "");
    const auto r = run({"analyze", dir.file("empty.ts")});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("empty stream") != std::string::npos);
    CHECK(run({"analyze", dir.file("missing.ts")}).code == cli::kExitData);
    CHECK(run({"analyze", dir.file("empty.ts"), "--clock", "gps"}).code == cli::kExitUsage);
    CHECK(run({"analyze", dir.file("empty.ts"), "--format", "xml"}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({}).code == cli::kExitUsage);
}

TEST_CASE("insert and extract round trip through files and pipes")
{
    TempDir dir;
    write_file(dir.file("s.json"), kScenario);
    REQUIRE(run({"generate", dir.file("s.json"), "--duration", "3", "-o", dir.file("in.ts")}).code == 0);
    std::string payload(40'000, '\0');
    std::mt19937 rng(1);
    for (auto& c : payload)
        c = static_cast<char>(rng());
    write_file(dir.file("payload.bin"), payload);

    const auto ins = run({"insert", dir.file("in.ts"), dir.file("out.ts"), "--payload", dir.file("payload.bin"),
                          "--data-pid", "0x300", "--pmt-pid", "0x301", "--program", "42", "--reserve", "0.1"});
    REQUIRE(ins.code == 0);
    CHECK(ins.err.find("packets substituted") != std::string::npos);
    CHECK(fs::file_size(dir.file("out.ts")) == fs::file_size(dir.file("in.ts")));

    const auto ext = run({"extract", dir.file("out.ts"), "--data-pid", "0x300", "-o", dir.file("back.bin")});
    REQUIRE(ext.code == 0);
    CHECK(slurp(dir.file("back.bin")) == payload);

    const auto inspect = run({"inspect", dir.file("out.ts")});
    CHECK(inspect.code == 0);
    CHECK(inspect.out.find("program 42") != std::string::npos);
    CHECK(inspect.out.find("Alpha") != std::string::npos);

    // Same pipeline over stdin/stdout.
    const auto piped = run({"insert", "-", "-", "--payload", dir.file("payload.bin"), "--data-pid", "0x300",
                            "--pmt-pid", "0x301", "--program", "42", "--reserve", "0.1"},
                           slurp(dir.file("in.ts")));
    REQUIRE(piped.code == 0);
    CHECK(piped.out == slurp(dir.file("out.ts")));
    const auto piped_ext = run({"extract", "-", "--data-pid", "0x300"}, piped.out);
    CHECK(piped_ext.out == payload);

    SUBCASE("settings file")
    {
        write_file(dir.file("ins.json"), R"({"program_number": 42, "data_pid": "0x300", "pmt_pid": 769, "reserve_fraction": 0.1})");
        const auto r = run({"insert", dir.file("in.ts"), dir.file("cfg.ts"), "--payload", dir.file("payload.bin"),
                            "--config", dir.file("ins.json")});
        REQUIRE(r.code == 0);
        CHECK(slurp(dir.file("cfg.ts")) == slurp(dir.file("out.ts")));
    }
}

TEST_CASE("insert errors leave no output behind")
{
    TempDir dir;
    write_file(dir.file("s.json"), kScenario);
    REQUIRE(run({"generate", dir.file("s.json"), "--duration", "2", "-o", dir.file("in.ts")}).code == 0);
    write_file(dir.file("p.bin"), "hello");

    const auto conflict = run({"insert", dir.file("in.ts"), dir.file("out.ts"), "--payload", dir.file("p.bin"),
                               "--data-pid", "256", "--pmt-pid", "0x301", "--program", "42"});
    CHECK(conflict.code == cli::kExitData);
    CHECK(conflict.err.find("pid conflict") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.file("out.ts")));

    const auto same = run({"insert", dir.file("in.ts"), dir.file("out.ts"), "--payload", dir.file("p.bin"),
                           "--data-pid", "0x301", "--pmt-pid", "0x301", "--program", "42"});
    CHECK(same.code == cli::kExitUsage);

    CHECK(run({"extract", dir.file("in.ts"), "--data-pid", "0x300"}).code == cli::kExitData);
}

TEST_CASE("inspect without a PAT lists PID counts")
{
    std::string raw;
    for (int i = 0; i < 10; ++i) {
        const auto p = serialize_packet(make_null_packet());
        raw.append(reinterpret_cast<const char*>(p.data()), p.size());
    }
    const auto r = run({"inspect", "-"}, raw);
    CHECK(r.code == 0);
    CHECK(r.err.find("no PAT") != std::string::npos);
    CHECK(r.out.find("0x1FFF") != std::string::npos);
}
