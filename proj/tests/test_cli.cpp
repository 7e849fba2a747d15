#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipsim/harness.hpp"
#include "ipsim/io.hpp"

namespace fs = std::filesystem;
using namespace ipsim;

namespace {

const fs::path kSource = IPSIM_SOURCE_DIR;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ipsim_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string mask_text(std::initializer_list<int> bits) {
    std::string s;
    for (int b : bits) s += b ? "1\n" : "0\n";
    return s;
}

// Diagnostic contract: nonzero exit and exactly one "ipsim: error: " line.
void check_single_line_error(const Result& r, const std::string& kind) {
    CHECK(r.code != 0);
    CHECK(r.err.rfind("ipsim: error: " + kind + ": ", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

double stat(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + "=");
    REQUIRE(pos != std::string::npos);
    const std::string v = text.substr(pos + key.size() + 1, text.find('\n', pos) - pos - key.size() - 1);
    return v == "inf" ? INFINITY : std::stod(v);
}

}  // namespace

TEST_CASE("gen checker") {
    TempDir tmp("checker");
    REQUIRE(cli({"gen", "--pattern", "checker", "--width", "8", "--height", "8", "--out", tmp / "c.pgm"}).code == 0);
    const auto img = read_image(tmp / "c.pgm");
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) CHECK(img.at(x, y, 0) == ((x + y) % 2 ? 1.0 : 0.0));
    }
}

TEST_CASE("gen noise is seeded") {
    TempDir tmp("noise");
    for (const char* name : {"a.ppm", "b.ppm"}) {
        REQUIRE(cli({"gen", "--pattern", "noise", "--seed", "5", "--width", "16", "--height", "8", "--out", tmp / name}).code == 0);
    }
    REQUIRE(cli({"gen", "--pattern", "noise", "--seed", "6", "--width", "16", "--height", "8", "--out", tmp / "c.ppm"}).code == 0);
    CHECK(read_bytes(tmp / "a.ppm") == read_bytes(tmp / "b.ppm"));
    CHECK(read_bytes(tmp / "a.ppm") != read_bytes(tmp / "c.ppm"));
}

TEST_CASE("gen gradient") {
    TempDir tmp("gradient");
    REQUIRE(cli({"gen", "--pattern", "gradient", "--width", "256", "--height", "1", "--out", tmp / "g.pgm"}).code == 0);
    const auto img = read_image(tmp / "g.pgm");
    CHECK(img.at(0, 0, 1) == 0.0);
    CHECK(img.at(255, 0, 1) == 1.0);
    for (int x = 0; x < 256; ++x) CHECK(img.at(x, 0, 1) == doctest::Approx(x / 255.0).epsilon(1e-4));
}

TEST_CASE("simulate cardinality and empty mask") {
    TempDir tmp("sim");
    REQUIRE(cli({"gen", "--pattern", "gradient", "--width", "64", "--height", "64", "--out", tmp / "g.pgm"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "32", "--height", "32", "--rows", "4", "--out", tmp / "w.ipwb"}).code == 0);
    write_text(tmp / "full.txt", mask_text({1, 1, 1, 1}));
    write_text(tmp / "none.txt", mask_text({0, 0, 0, 0}));

    auto r = cli({"simulate", "--input", tmp / "g.pgm", "--weights", tmp / "w.ipwb", "--mask", tmp / "full.txt", "--out", tmp / "f.ipff"});
    REQUIRE(r.code == 0);
    auto f = read_features(tmp / "f.ipff");
    CHECK(f.entries.size() == 4);
    CHECK(f.vectors == 4);
    CHECK(f.feature_count() == 16);

    r = cli({"simulate", "--input", tmp / "g.pgm", "--weights", tmp / "w.ipwb", "--mask", tmp / "none.txt", "--out", tmp / "e.ipff"});
    CHECK(r.code == 0);
    CHECK(read_features(tmp / "e.ipff").entries.empty());

    const auto log = nlohmann::json::parse(read_bytes(tmp / "f.ipff.log.json"));
    CHECK(log["config"]["hardware"]["enob_analog"] == 6.0);
    CHECK(log.contains("seed"));
    CHECK(log["fidelity"] == "analog");
}

TEST_CASE("ideal simulation equals the oracle bit for bit") {
    TempDir tmp("ideal");
    REQUIRE(cli({"gen", "--pattern", "noise", "--seed", "3", "--width", "96", "--height", "64", "--out", tmp / "n.ppm"}).code == 0);
    for (const std::string rgb : {"", "--rgb"}) {
        std::vector<std::string> gen{"gen", "--pattern", "weights", "--width", "32", "--height", "32", "--rows", "7", "--seed", "4", "--out", tmp / "w.ipwb"};
        if (!rgb.empty()) gen.push_back(rgb);
        REQUIRE(cli(gen).code == 0);
        for (const std::string fmt : {"bin", "csv"}) {
            REQUIRE(cli({"simulate", "--fidelity", "ideal", "--format", fmt, "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--out", tmp / "s.out"}).code == 0);
            REQUIRE(cli({"oracle", "--format", fmt, "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--out", tmp / "o.out"}).code == 0);
            CHECK(read_bytes(tmp / "s.out") == read_bytes(tmp / "o.out"));
            CHECK(cli({"compare", tmp / "s.out", tmp / "o.out"}).code == 0);
        }
    }
}

TEST_CASE("oracle returns biases for zero input or zero weights") {
    TempDir tmp("bias");
    write_text(tmp / "black.pgm", std::string("P5\n32 32\n255\n") + std::string(32 * 32, '\0'));
    REQUIRE(cli({"gen", "--pattern", "noise", "--width", "32", "--height", "32", "--out", tmp / "n.pgm"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "32", "--height", "32", "--rows", "3", "--out", tmp / "w.ipwb"}).code == 0);
    const auto bank = read_weight_bank(tmp / "w.ipwb");
    Matrix zero(3, 1024);
    write_weight_bank(tmp / "z.ipwb", WeightBank::from_raw(zero, bank.biases()));
    write_text(tmp / "m.txt", "1\n");

    for (auto [img, w] : {std::pair{"black.pgm", "w.ipwb"}, std::pair{"n.pgm", "z.ipwb"}}) {
        REQUIRE(cli({"oracle", "--input", tmp / img, "--weights", tmp / w, "--mask", tmp / "m.txt", "--out", tmp / "o.ipff"}).code == 0);
        const auto f = read_features(tmp / "o.ipff");
        REQUIRE(f.entries.size() == 1);
        for (std::size_t v = 0; v < 3; ++v) CHECK(f.entries[0].features[v] == static_cast<double>(static_cast<float>(bank.bias(v))));
    }
}

TEST_CASE("compare exit codes and analog accuracy") {
    TempDir tmp("cmp");
    REQUIRE(cli({"gen", "--pattern", "noise", "--seed", "11", "--width", "256", "--height", "256", "--out", tmp / "n.ppm"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "8", "--height", "8", "--rows", "8", "--seed", "12", "--out", tmp / "w.ipwb"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "mask", "--count", "1024", "--fraction", "1", "--out", tmp / "m.txt"}).code == 0);
    const std::string cfg = (kSource / "configs" / "sim_8x8.json").string();
    REQUIRE(cli({"simulate", "--config", cfg, "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--mask", tmp / "m.txt", "--out", tmp / "a.ipff"}).code == 0);
    REQUIRE(cli({"oracle", "--config", cfg, "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--mask", tmp / "m.txt", "--out", tmp / "o.ipff"}).code == 0);

    auto r = cli({"compare", tmp / "a.ipff", tmp / "a.ipff"});
    CHECK(r.code == 0);
    CHECK(stat(r.out, "max_abs_error") == 0.0);

    r = cli({"compare", tmp / "a.ipff", tmp / "o.ipff", "--tolerance", "0"});
    CHECK(r.code == 1);
    CHECK(stat(r.out, "enob") >= 6.0);
    CHECK(stat(r.out, "count") == 1024 * 8);

    CHECK(cli({"compare", tmp / "a.ipff", tmp / "o.ipff", "--tolerance", "1"}).code == 0);

    std::string half;
    for (int i = 0; i < 1024; ++i) half += i < 512 ? "1\n" : "0\n";
    write_text(tmp / "half.txt", half);
    REQUIRE(cli({"oracle", "--config", cfg, "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--mask", tmp / "half.txt", "--out", tmp / "h.ipff"}).code == 0);
    r = cli({"compare", tmp / "a.ipff", tmp / "h.ipff"});
    CHECK(r.code == 2);
    check_single_line_error(r, "shape");
}

TEST_CASE("report") {
    TempDir tmp("report");
    const std::string op = (kSource / "configs" / "operating_point.json").string();
    auto r = cli({"report", "--config", op, "--out", tmp / "r.json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(read_bytes(tmp / "r.json"));
    CHECK(j["frame_rate_hz"].get<double>() >= 90.0);
    CHECK(j["power_mw"]["total"].get<double>() <= 60.0);
    CHECK(std::abs(j["pitch_um"].get<double>() - 22.0) <= 0.1);
    CHECK(fs::exists(tmp / "r.txt"));
    CHECK(read_bytes(tmp / "r.txt") == r.out);

    write_text(tmp / "c1.json", R"({"timing": {"C": 1}})");
    REQUIRE(cli({"report", "--config", tmp / "c1.json", "--out", tmp / "c1.out.json"}).code == 0);
    const auto j1 = nlohmann::json::parse(read_bytes(tmp / "c1.out.json"));
    CHECK(j1["compute_time_s"].get<double>() / j["compute_time_s"].get<double>() == 2.0);

    write_text(tmp / "bad.json", R"({"timing": {"C": 3}})");
    check_single_line_error(cli({"report", "--config", tmp / "bad.json"}), "invariant");
    CHECK(cli({"report", "--config", tmp / "bad.json"}).code == 3);
}

TEST_CASE("error paths are single-line diagnostics") {
    TempDir tmp("err");
    REQUIRE(cli({"gen", "--pattern", "gradient", "--width", "64", "--height", "64", "--out", tmp / "g.pgm"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "32", "--height", "32", "--rows", "2", "--out", tmp / "w.ipwb"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "8", "--height", "8", "--rows", "2", "--out", tmp / "w8.ipwb"}).code == 0);
    write_text(tmp / "short.txt", "1\n1\n");
    write_text(tmp / "unknown.json", R"({"hardware": {"V_RR": 1}})");
    write_text(tmp / "broken.json", "{");
    write_text(tmp / "junk.pgm", "hello");

    const std::string g = tmp / "g.pgm", w = tmp / "w.ipwb", o = tmp / "o.ipff";
    Result r = cli({"simulate", "--input", tmp / "missing.pgm", "--weights", w, "--out", o});
    CHECK(r.code == 2);
    check_single_line_error(r, "io");
    r = cli({"simulate", "--input", tmp / "junk.pgm", "--weights", w, "--out", o});
    CHECK(r.code == 2);
    check_single_line_error(r, "io");
    r = cli({"simulate", "--input", g, "--weights", tmp / "missing.ipwb", "--out", o});
    CHECK(r.code == 2);
    check_single_line_error(r, "io");
    r = cli({"simulate", "--input", g, "--weights", w, "--out", o, "--mask", tmp / "short.txt"});
    CHECK(r.code == 3);
    check_single_line_error(r, "invariant");
    r = cli({"simulate", "--input", g, "--weights", tmp / "w8.ipwb", "--out", o});
    CHECK(r.code == 3);
    check_single_line_error(r, "invariant");
    r = cli({"simulate", "--config", tmp / "unknown.json", "--input", g, "--weights", w, "--out", o});
    CHECK(r.code == 3);
    check_single_line_error(r, "invariant");
    r = cli({"simulate", "--config", tmp / "broken.json", "--input", g, "--weights", w, "--out", o});
    check_single_line_error(r, "invariant");
    r = cli({"simulate", "--input", g, "--weights", w, "--out", o, "--fidelity", "magic"});
    CHECK(r.code == 2);
    check_single_line_error(r, "usage");
    r = cli({"simulate", "--fidelity", "ideal", "--raw-codes", "--input", g, "--weights", w, "--out", o});
    CHECK(r.code == 3);
    check_single_line_error(r, "invariant");
    r = cli({"frobnicate"});
    CHECK(r.code == 2);
    check_single_line_error(r, "usage");
    r = cli({});
    CHECK(r.code == 2);
    check_single_line_error(r, "usage");
    r = cli({"gen", "--pattern", "stripes", "--out", tmp / "x.pgm"});
    CHECK(r.code == 3);
    check_single_line_error(r, "invariant");
    r = cli({"compare", tmp / "missing.ipff", tmp / "missing.ipff"});
    CHECK(r.code == 2);
    check_single_line_error(r, "io");
    r = cli({"simulate", "--input", g, "--weights", w, "--out", (tmp.path / "no" / "dir" / "o.ipff").string()});
    CHECK(r.code == 2);
    check_single_line_error(r, "io");
}

TEST_CASE("runs are deterministic across repeats and thread counts") {
    TempDir tmp("det");
    REQUIRE(cli({"gen", "--pattern", "noise", "--seed", "21", "--width", "128", "--height", "96", "--out", tmp / "n.ppm"}).code == 0);
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "8", "--height", "8", "--rows", "16", "--out", tmp / "w.ipwb"}).code == 0);
    const std::string cfg = (kSource / "configs" / "sim_8x8.json").string();
    std::vector<std::string> outputs, logs;
    for (const char* threads : {"1", "8", "3", "1"}) {
        ::setenv("IPSIM_THREADS", threads, 1);
        const std::string out = tmp / (std::string("t") + std::to_string(outputs.size()) + ".ipff");
        REQUIRE(cli({"simulate", "--config", cfg, "--seed", "99", "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--out", out}).code == 0);
        outputs.push_back(read_bytes(out));
        auto log = nlohmann::json::parse(read_bytes(out + ".log.json"));
        log.erase("outputs");
        logs.push_back(log.dump());
    }
    ::unsetenv("IPSIM_THREADS");
    for (const auto& o : outputs) CHECK(o == outputs[0]);
    for (const auto& l : logs) CHECK(l == logs[0]);

    REQUIRE(cli({"simulate", "--config", cfg, "--seed", "100", "--input", tmp / "n.ppm", "--weights", tmp / "w.ipwb", "--out", tmp / "s.ipff"}).code == 0);
    CHECK(read_bytes(tmp / "s.ipff") != outputs[0]);
}

TEST_CASE("multi-frame directories") {
    TempDir tmp("multi");
    fs::create_directories(tmp.path / "in");
    fs::create_directories(tmp.path / "masks");
    for (int i = 0; i < 3; ++i) {
        const std::string name = "img" + std::to_string(i) + ".pgm";
        REQUIRE(cli({"gen", "--pattern", "noise", "--seed", std::to_string(i), "--width", "16", "--height", "16", "--out", (tmp.path / "in" / name).string()}).code == 0);
        write_text(tmp.path / "masks" / ("m" + std::to_string(i) + ".txt"), mask_text({i != 0, 1, i == 2, 0}));
    }
    REQUIRE(cli({"gen", "--pattern", "weights", "--width", "8", "--height", "8", "--rows", "2", "--out", tmp / "w.ipwb"}).code == 0);
    write_text(tmp / "c.json", R"({"tiling": {"patch_w": 8, "patch_h": 8}})");
    REQUIRE(cli({"simulate", "--config", tmp / "c.json", "--input", tmp / "in", "--mask", tmp / "masks", "--weights", tmp / "w.ipwb", "--out", tmp / "out"}).code == 0);
    const std::size_t want[3] = {1, 2, 3};
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05d.ipff", i);
        const auto f = read_features(tmp.path / "out" / name);
        CHECK(f.frame == static_cast<std::uint32_t>(i));
        CHECK(f.entries.size() == want[i]);
    }
    const auto log = nlohmann::json::parse(read_bytes(tmp.path / "out" / "run.log.json"));
    CHECK(log["frames"].size() == 3);
}
