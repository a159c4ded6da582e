#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "semilab/semilab.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/wait.h>
#endif

using namespace semilab;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = "io_cli_scratch";

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    std::ofstream out(p);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the CLI binary; the path comes from the environment or the build.
int run_cli(const std::string& args) {
    const char* path = std::getenv("SEMILAB_CLI_PATH");
#ifdef SEMILAB_CLI_PATH
    if (!path) path = SEMILAB_CLI_PATH;
#endif
    REQUIRE(path != nullptr);
    const std::string cmd =
        std::string("\"") + path + "\" " + args + " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
#if defined(WIFEXITED)
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
#else
    return status;
#endif
}

} // namespace

TEST_CASE("kernel snapshot round-trips bit-exactly") {
    const Grid g = Grid::from_extent(0.5, 7.5);
    const KernelOperator w(g, oracles::random_matrix(g.n, 3));
    fs::create_directories(kScratch);
    const std::string path = (kScratch / "snap.csv").string();
    write_kernel_snapshot(path, w);
    const KernelOperator back = read_kernel_snapshot(path);
    REQUIRE(back.grid == g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) CHECK(back.k(i, j) == w.k(i, j));

    // a second write of the read-back kernel is byte-identical
    const std::string path2 = (kScratch / "snap2.csv").string();
    write_kernel_snapshot(path2, back);
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("complex entry parser handles exponent signs") {
    using semilab::detail::parse_complex;
    CHECK(parse_complex("1.5-0.25j") == cplx(1.5, -0.25));
    CHECK(parse_complex("-1.5+0.25j") == cplx(-1.5, 0.25));
    CHECK(parse_complex("1e-5-2e+3j") == cplx(1e-5, -2e3));
    CHECK(parse_complex("-1E-5+2E-3j") == cplx(-1e-5, 2e-3));
    CHECK_THROWS_AS(parse_complex("1.5"), ConfigError);
    CHECK_THROWS_AS(parse_complex("j"), ConfigError);
    CHECK_THROWS_AS(parse_complex("1.5+xj"), ConfigError);
}

TEST_CASE("config text parsing") {
    std::istringstream in(
        "# full-line comment\n"
        "model = shift\n"
        "\n"
        "h = 0.03125   # trailing comment\n"
        "  x_max=8\n");
    const auto kv = parse_config_text(in);
    REQUIRE(kv.size() == 3);
    CHECK(kv.at("model") == "shift");
    CHECK(kv.at("h") == "0.03125");
    CHECK(kv.at("x_max") == "8");

    std::istringstream bad1("model shift\n");
    CHECK_THROWS_AS(parse_config_text(bad1), ConfigError);
    std::istringstream bad2("= value\n");
    CHECK_THROWS_AS(parse_config_text(bad2), ConfigError);
    CHECK_THROWS_AS(parse_config_file("definitely_missing_config.txt"), ConfigError);
}

TEST_CASE("scenario config validation and defaults") {
    SUBCASE("defaults") {
        const ScenarioConfig c = ScenarioConfig::from_map({});
        CHECK(c.model == "shift");
        CHECK(c.h == doctest::Approx(1.0 / 64));
        CHECK(c.omega_profile == "exp");
        CHECK(c.state_alpha == 1.0);
    }
    SUBCASE("diffusion defaults pick the quartic-boundary state") {
        const ScenarioConfig c = ScenarioConfig::from_map({{"model", "diffusion"}});
        CHECK(c.omega_profile == "x2_exp");
        CHECK(c.state_profile == "x2_exp");
        CHECK(c.omega_alpha == 2.0);
        CHECK(c.state_alpha == 2.0);
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"model", "heat"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"h", "abc"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"h", "-0.1"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"bogus_key", "1"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"fast_path", "maybe"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"seed", "12x"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"omega", "gauss"}}), ConfigError);
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"flux_stencil", "third"}}), ConfigError);
        // x_max/h >= 8
        CHECK_THROWS_AS(ScenarioConfig::from_map({{"h", "1"}, {"x_max", "4"}}), ConfigError);
    }
    SUBCASE("hash ignores the output directory") {
        const ScenarioConfig a = ScenarioConfig::from_map({{"h", "0.03125"}, {"out", "dir_a"}});
        const ScenarioConfig b = ScenarioConfig::from_map({{"h", "0.03125"}, {"out", "dir_b"}});
        const ScenarioConfig c = ScenarioConfig::from_map({{"h", "0.015625"}, {"out", "dir_a"}});
        CHECK(a.hash == b.hash);
        CHECK(a.hash != c.hash);
    }
}

TEST_CASE("cli: usage and configuration failures exit with code 2") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("transmogrify") == 2);
    CHECK(run_cli("probe") == 2);
    CHECK(run_cli("evolve --config does_not_exist.cfg") == 2);
    CHECK(run_cli("evolve --config") == 2);
    CHECK(run_cli("evolve --frobnicate 1") == 2);
    CHECK(run_cli("--help") == 0);

    fs::create_directories(kScratch);
    write_file(kScratch / "bad_key.cfg", "model = shift\nwibble = 3\n");
    CHECK(run_cli("evolve --config " + (kScratch / "bad_key.cfg").string()) == 2);
    write_file(kScratch / "bad_dt.cfg", "model = shift\nh = 0.125\nx_max = 8\ndt = 0.1\nT = 1\n");
    CHECK(run_cli("evolve --config " + (kScratch / "bad_dt.cfg").string()) == 2);
    write_file(kScratch / "bad_probe.cfg", "model = shift\nh = 0.125\nx_max = 8\n");
    CHECK(run_cli("probe warp --config " + (kScratch / "bad_probe.cfg").string()) == 2);
    // the domain probe needs the shift dual solver
    write_file(kScratch / "diff.cfg", "model = diffusion\nh = 0.125\nx_max = 8\n");
    CHECK(run_cli("probe domain --config " + (kScratch / "diff.cfg").string()) == 2);
}

TEST_CASE("cli: evolve writes the documented files and is deterministic") {
    fs::create_directories(kScratch);
    const std::string cfg =
        "model = shift\nh = 0.125\nx_max = 8\nT = 0.5\ndt = 0.125\nsnapshots = true\n";
    write_file(kScratch / "run.cfg", cfg);
    const std::string base = "evolve --config " + (kScratch / "run.cfg").string();

    REQUIRE(run_cli(base + " --out " + (kScratch / "out1").string()) == 0);
    REQUIRE(run_cli(base + " --out " + (kScratch / "out2").string()) == 0);
    for (const char* name :
         {"solution.csv", "timeseries.csv", "omega.csv", "state_initial.csv", "state_final.csv"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(kScratch / "out1" / name));
        CHECK(read_file(kScratch / "out1" / name) == read_file(kScratch / "out2" / name));
    }
    // header carries the config hash and grid
    const std::string head = read_file(kScratch / "out1" / "solution.csv");
    CHECK(head.rfind("# config_hash=", 0) == 0);
    CHECK(head.find("h=0.125 n=65") != std::string::npos);
    // row count: header + columns + 5 states
    CHECK(std::count(head.begin(), head.end(), '\n') == 7);
}

TEST_CASE("cli: zero-horizon evolve and probes succeed") {
    fs::create_directories(kScratch);
    write_file(kScratch / "zero.cfg", "model = shift\nh = 0.125\nx_max = 8\nT = 0\ndt = 0.125\n");
    CHECK(run_cli("evolve --config " + (kScratch / "zero.cfg").string() + " --out " +
                  (kScratch / "zero_out").string()) == 0);

    write_file(kScratch / "probe.cfg", "model = shift\nh = 0.0625\nx_max = 8\ndt = 0.0625\n");
    const std::string probe_base = " --config " + (kScratch / "probe.cfg").string() + " --out " +
                                   (kScratch / "probe_out").string();
    CHECK(run_cli("probe zero-correction" + probe_base) == 0);
    CHECK(run_cli("probe cs-gap" + probe_base) == 0);
    CHECK(fs::exists(kScratch / "probe_out" / "probe_zero-correction.csv"));
    CHECK(fs::exists(kScratch / "probe_out" / "probe_cs-gap.csv"));
}
