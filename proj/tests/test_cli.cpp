#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "beablesim/runner.hpp"

using namespace beablesim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cli_test") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct CmdResult {
    int exit_code;
    std::string out;
    std::string err;
};

CmdResult run_cmd(const RunConfig& config) {
    std::ostringstream out, err;
    const int code = cmd_run(config, out, err);
    return {code, out.str(), err.str()};
}

CmdResult verify_cmd(const RunConfig& config) {
    std::ostringstream out, err;
    const int code = cmd_verify(config, out, err);
    return {code, out.str(), err.str()};
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("cmd_run writes the three measurement outputs and echoes the seed") {
    TempDir dir("run_example1");
    RunConfig config;
    config.scenario = "example1";
    config.trials = 40;
    config.seed = 7;
    config.out_dir = dir.path.string();
    config.sample_times = {0.5};

    CmdResult r = run_cmd(config);
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.err.empty());
    CHECK(contains(r.out, "wrote"));
    CHECK(contains(r.out, "seed: 7"));

    REQUIRE(fs::exists(dir.path / "trajectories.csv"));
    REQUIRE(fs::exists(dir.path / "contingency.csv"));
    REQUIRE(fs::exists(dir.path / "summary.txt"));

    const std::string traj = slurp(dir.path / "trajectories.csv");
    CHECK(contains(traj, "t,trial,beable_index,beable_label"));
    // per trial: samples at 0, 0.5, 1 -> header + 40 * 3 lines
    CHECK(std::count(traj.begin(), traj.end(), '\n') == 1 + 40 * 3);

    const std::string summary = slurp(dir.path / "summary.txt");
    CHECK(contains(summary, "scenario: example1"));
    CHECK(contains(summary, "faithful_fraction: 1"));
    CHECK(contains(summary, "seed: 7"));
    CHECK(contains(summary, "seed = 7")); // the reproducing config echo

    const std::string contingency = slurp(dir.path / "contingency.csv");
    CHECK(contains(contingency, "initial,measured,count"));
    CHECK(contains(contingency, "+,-,0"));
    CHECK(contains(contingency, "-,+,0"));
}

TEST_CASE("cmd_run is byte-identical across repeats of the same seed") {
    TempDir dir("run_repeat");
    RunConfig config;
    config.scenario = "example2";
    config.trials = 30;
    config.seed = 4242;
    config.out_dir = dir.path.string();
    config.sample_times = {1.5, 3.0};

    REQUIRE(run_cmd(config).exit_code == kExitOk);
    const std::string traj1 = slurp(dir.path / "trajectories.csv");
    const std::string summary1 = slurp(dir.path / "summary.txt");
    const std::string cont1 = slurp(dir.path / "contingency.csv");

    REQUIRE(run_cmd(config).exit_code == kExitOk);
    CHECK(slurp(dir.path / "trajectories.csv") == traj1);
    CHECK(slurp(dir.path / "summary.txt") == summary1);
    CHECK(slurp(dir.path / "contingency.csv") == cont1);

    // the four-pulse run from a fixed + start always reads out -
    CHECK(contains(summary1, "faithful_fraction: 0"));
}

TEST_CASE("cmd_run without a seed generates one and reports it") {
    TempDir dir("run_unseeded");
    RunConfig config;
    config.scenario = "forgetting";
    config.trials = 10;
    config.out_dir = dir.path.string();

    CmdResult r = run_cmd(config);
    REQUIRE(r.exit_code == kExitOk);
    const std::size_t at = r.out.find("seed: ");
    REQUIRE(at != std::string::npos);
    const std::string seed_digits = r.out.substr(at + 6, r.out.find('\n', at) - at - 6);
    CHECK_FALSE(seed_digits.empty());

    // the echoed config pins the generated seed for replay
    const std::string summary = slurp(dir.path / "summary.txt");
    CHECK(contains(summary, "seed = " + seed_digits));
}

TEST_CASE("cmd_run exit codes separate config errors from runtime failures") {
    // contradictory definition: a named scenario plus inline keys
    RunConfig both;
    both.scenario = "example1";
    both.dim = 2;
    CmdResult r = run_cmd(both);
    CHECK(r.exit_code == kExitConfigError);
    CHECK(contains(r.err, "config error:"));

    RunConfig unknown;
    unknown.scenario = "nonesuch";
    CHECK(run_cmd(unknown).exit_code == kExitConfigError);

    // verified coupling whose pointers cannot be read out in the beable basis
    TempDir dir("run_ambiguous");
    RunConfig ambiguous = parse_config(
        "segment = 1 : -pi/4 * kron(sz, sy)\n"
        "measurement = 2 x 2\n"
        "coefficients = 1, 0\n"
        "trials = 2\n"
        "seed = 1\n");
    ambiguous.out_dir = (dir.path / "amb").string();
    CmdResult amb = run_cmd(ambiguous);
    CHECK(amb.exit_code == kExitRuntimeError);
    CHECK(contains(amb.err, "error:"));
}

TEST_CASE("cmd_verify prints the pointer map for a sound coupling") {
    RunConfig config;
    config.scenario = "example2";
    CmdResult r = verify_cmd(config);
    REQUIRE(r.exit_code == kExitOk);
    CHECK(contains(r.out, "von Neumann check: pass"));
    CHECK(contains(r.out, "pointer state for system value +"));
    CHECK(contains(r.out, "readout: apparatus + -> system +"));
    CHECK(contains(r.out, "readout: apparatus - -> system -"));
}

TEST_CASE("cmd_verify fails couplings that do not measure") {
    RunConfig idle = parse_config(
        "segment = 1 : 0 * id(4)\n"
        "measurement = 2 x 2\n"
        "coefficients = 1, 0\n");
    CmdResult r = verify_cmd(idle);
    CHECK(r.exit_code == kExitVerifyFailed);
    CHECK(contains(r.out, "von Neumann check: FAIL"));
    CHECK(contains(r.out, "not orthogonal"));

    RunConfig plain;
    plain.scenario = "forgetting";
    CmdResult p = verify_cmd(plain);
    CHECK(p.exit_code == kExitConfigError);
    CHECK(contains(p.err, "verify needs a measurement run"));
}

TEST_CASE("cmd_verify marks undecodable pointers without failing the check") {
    RunConfig config = parse_config(
        "segment = 1 : -pi/4 * kron(sz, sy)\n"
        "measurement = 2 x 2\n"
        "coefficients = 1, 0\n");
    CmdResult r = verify_cmd(config);
    CHECK(r.exit_code == kExitOk);
    CHECK(contains(r.out, "von Neumann check: pass"));
    CHECK(contains(r.out, "(ambiguous)"));
}

// ---- the installed binary, exercised end to end ----

namespace {

int run_binary(const std::string& args) {
    const char* bin = std::getenv("BEABLESIM_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string(bin) + " " + args + " > cli_test/bin.out 2> cli_test/bin.err";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("binary: subcommands, flags, and exit codes") {
    if (std::getenv("BEABLESIM_BIN") == nullptr) {
        MESSAGE("BEABLESIM_BIN not set; skipping binary checks");
        return;
    }
    fs::create_directories("cli_test");

    SUBCASE("run with flags") {
        TempDir dir("bin_run");
        CHECK(run_binary("run --scenario example1 --trials 5 --seed 1 --out-dir " +
                         (dir.path / "out").string()) == 0);
        CHECK(fs::exists(dir.path / "out" / "summary.txt"));
    }

    SUBCASE("flag overrides beat config file values") {
        TempDir dir("bin_override");
        const fs::path cfg = dir.path / "run.cfg";
        {
            std::ofstream out(cfg);
            out << "scenario = forgetting\ntrials = 3\nseed = 9\nout_dir = " +
                       (dir.path / "a").string() + "\n";
        }
        CHECK(run_binary("run --config " + cfg.string() + " --trials 4 --out-dir " +
                         (dir.path / "b").string()) == 0);
        CHECK_FALSE(fs::exists(dir.path / "a"));
        const std::string summary = slurp(dir.path / "b" / "summary.txt");
        CHECK(contains(summary, "trials: 4"));
        CHECK(contains(summary, "seed: 9"));
    }

    SUBCASE("verify propagates the check result") {
        TempDir dir("bin_verify");
        const fs::path cfg = dir.path / "idle.cfg";
        {
            std::ofstream out(cfg);
            out << "segment = 1 : 0 * id(4)\nmeasurement = 2 x 2\ncoefficients = 1, 0\n";
        }
        CHECK(run_binary("verify --scenario example1") == 0);
        CHECK(run_binary("verify --config " + cfg.string()) == 4);
    }

    SUBCASE("usage errors exit with the config-error code") {
        CHECK(run_binary("") == 2);
        CHECK(run_binary("run --no-such-flag") == 2);
        CHECK(run_binary("run --scenario nonesuch") == 2);
        CHECK(run_binary("run") == 2); // neither --scenario nor --config
        CHECK(run_binary("--help") == 0);
    }

    fs::remove_all("cli_test");
}
