#include <stdexcept>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

#include "attnlego/tensor_file.hpp"
#include "attnlego/trace.hpp"
#include "attnlego/workbench.hpp"

using namespace attnlego;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("attnlego_" + tag + "_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void gen_data(const TempDir& dir, uint64_t seed) {
    GenDataOptions g;
    g.preset = "desk-small";
    g.output_dir = dir.path.string();
    g.seed = seed;
    std::ostringstream out, err;
    REQUIRE(cmd_gen_data(g, out, err) == kExitOk);
}

template <typename Opts>
void fill_inputs(Opts& o, const TempDir& dir) {
    o.preset = "desk-small";
    o.weights_q = dir / "wq.algo";
    o.weights_k = dir / "wk.algo";
    o.weights_v = dir / "wv.algo";
    o.tokens = dir / "tokens.algo";
}

}  // namespace

TEST_CASE("tensor file round trip") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        TensorFile t;
        const int nd = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < nd; ++i)
            t.dims.push_back(static_cast<uint32_t>(rng() % 9));
        t.scale = std::ldexp(static_cast<double>(rng() % 1000 + 1), -static_cast<int>(rng() % 20)) / 3.0;
        t.data.resize(t.element_count());
        for (auto& x : t.data)
            x = static_cast<int8_t>(rng());
        const auto bytes = serialize(t);
        const auto back = parse_tensor(bytes, "mem");
        CHECK(back == t);
        CHECK(back.scale == t.scale);
    }
}

TEST_CASE("tensor file errors name the file") {
    TempDir dir("tf");
    TensorFile t{{4, 8}, 0.5, std::vector<int8_t>(32, 3)};
    const auto good = dir / "good.algo";
    write_tensor_file(good, t);
    CHECK(read_tensor_file(good) == t);

    auto bytes = serialize(t);
    const auto cut = dir / "cut.algo";
    {
        std::ofstream o(cut, std::ios::binary);
        o.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() - 5));
    }
    try {
        read_tensor_file(cut);
        FAIL("truncated file accepted");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("cut.algo") != std::string::npos);
    }
    bytes[0] = 'X';
    CHECK_THROWS_AS(parse_tensor(bytes, "x"), std::runtime_error);
    CHECK_THROWS_AS(read_tensor_file(dir / "missing.algo"), std::runtime_error);
    CHECK_THROWS_AS(to_matrix(TensorFile{{32}, 1.0, std::vector<int8_t>(32)}, "v"), std::runtime_error);
}

TEST_CASE("gen-lut") {
    std::ostringstream a, b, err;
    CHECK(cmd_gen_lut(GenLutOptions{}, a, err) == kExitOk);
    CHECK(cmd_gen_lut(GenLutOptions{}, b, err) == kExitOk);
    CHECK(a.str() == b.str());
    std::istringstream lines(a.str());
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line))
        all.push_back(line);
    REQUIRE(all.size() == 256);
    CHECK(all[0] == "0 32768");

    GenLutOptions bad;
    bad.in_format = "Q9.9";
    std::ostringstream out;
    CHECK(cmd_gen_lut(bad, out, err) == kExitUsage);
}

TEST_CASE("load_config precedence") {
    CHECK(load_config(std::nullopt, std::string("desk-small")).d_k == 32);
    CHECK_THROWS_AS(load_config(std::nullopt, std::nullopt), UsageError);
    TempDir dir("cfg");
    const auto path = dir / "c.json";
    std::ofstream(path) << R"({"preset": "paper-default", "seq_len": 64})";
    const auto c = load_config(path, std::string("desk-small"), std::string("quantized"));
    CHECK(c.d_model == 128);
    CHECK(c.seq_len == 64);
    CHECK(c.adc.mode == AdcMode::quantized);
    std::ofstream(dir / "bad.json") << "{";
    try {
        load_config(dir / "bad.json", std::nullopt);
        FAIL("malformed config accepted");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
    }
}

TEST_CASE("run produces stable artifacts") {
    TempDir dir("run");
    gen_data(dir, 21);
    auto opts = [&](const std::string& tag) {
        RunOptions r;
        fill_inputs(r, dir);
        r.output = dir / ("out" + tag + ".algo");
        r.trace = dir / ("trace" + tag + ".tsv");
        r.stats = dir / ("stats" + tag + ".json");
        return r;
    };
    std::ostringstream out, err;
    REQUIRE(cmd_run(opts("1"), out, err) == kExitOk);
    REQUIRE(cmd_run(opts("2"), out, err) == kExitOk);
    for (const char* f : {"out", "trace", "stats"}) {
        const std::string ext = std::string(f) == "out" ? ".algo" : std::string(f) == "trace" ? ".tsv" : ".json";
        const auto a = slurp(dir / (std::string(f) + "1" + ext));
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(dir / (std::string(f) + "2" + ext)));
    }
    const auto outputs = read_tensor_file(dir / "out1.algo");
    CHECK(outputs.dims == std::vector<uint32_t>{32, 32});

    const auto bytes = slurp(dir / "wk.algo");
    std::ofstream(dir / "wk.algo", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    std::ostringstream eout, eerr;
    CHECK(cmd_run(opts("3"), eout, eerr) != kExitOk);
    CHECK(eerr.str().find("wk.algo") != std::string::npos);
}

TEST_CASE("check passes bit-exact and fails a zero float tolerance") {
    TempDir dir("check");
    gen_data(dir, 22);
    CheckOptions c;
    fill_inputs(c, dir);
    std::ostringstream out, err;
    CHECK(cmd_check(c, out, err) == kExitOk);
    CHECK(out.str().find("PASS") != std::string::npos);
    c.adc = "quantized";
    CHECK(cmd_check(c, out, err) == kExitOk);
    c.adc.reset();
    c.mode = "float";
    c.tolerance = 0.0;
    std::ostringstream fout;
    CHECK(cmd_check(c, fout, err) == kExitCheckFailed);
    CHECK(fout.str().find("FAIL") != std::string::npos);
    c.tolerance = 10.0;
    CHECK(cmd_check(c, out, err) == kExitOk);
    c.mode = "fuzzy";
    CHECK(cmd_check(c, out, err) == kExitUsage);
}

TEST_CASE("stats over a trace") {
    TempDir dir("stats");
    gen_data(dir, 23);
    RunOptions r;
    fill_inputs(r, dir);
    r.output = dir / "o.algo";
    r.trace = dir / "t.tsv";
    std::ostringstream out, err;
    REQUIRE(cmd_run(r, out, err) == kExitOk);

    std::ifstream trace(*r.trace);
    const auto report = stats_report(trace);
    CHECK(report["checks"]["cim_span_64"] == true);
    CHECK(report["checks"]["column_write_span_128"] == true);

    std::istringstream empty("");
    const auto zero = stats_report(empty);
    CHECK(zero["total_cycles"] == 0);
    std::ofstream(dir / "empty.tsv").close();
    StatsOptions s{dir / "empty.tsv", std::nullopt};
    std::ostringstream sout;
    CHECK(cmd_stats(s, sout, err) == kExitOk);

    std::ofstream(dir / "bad.tsv") << "not a trace line\n";
    s.trace = dir / "bad.tsv";
    std::ostringstream berr;
    CHECK(cmd_stats(s, sout, berr) != kExitOk);
    CHECK(berr.str().find("bad.tsv") != std::string::npos);
}

TEST_CASE("command line binary") {
    TempDir dir("cli");
    const std::string cli = ATTNLEGO_CLI_PATH;
    auto sh = [](const std::string& cmd) {
        const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    CHECK(sh(cli + " gen-data --preset desk-small --output " + dir.path.string() + " --seed 3") == 0);
    const std::string in = " --preset desk-small --weights-q " + (dir / "wq.algo") + " --weights-k " +
                           (dir / "wk.algo") + " --weights-v " + (dir / "wv.algo") + " --tokens " +
                           (dir / "tokens.algo");
    CHECK(sh(cli + " run" + in + " --output " + (dir / "o.algo") + " --trace " + (dir / "t.tsv")) == 0);
    CHECK(sh(cli + " check" + in) == 0);
    CHECK(sh(cli + " check" + in + " --mode float --tolerance 0") == 1);
    CHECK(sh(cli + " stats --trace " + (dir / "t.tsv")) == 0);
    CHECK(sh(cli + " gen-lut --output " + (dir / "lut.txt")) == 0);
    CHECK(sh(cli + " run --bogus") == 2);
    CHECK(sh(cli + " run" + in) == 2);
}
