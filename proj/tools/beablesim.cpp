#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beablesim/config.hpp"
#include "beablesim/runner.hpp"

namespace {

struct Options {
    std::string scenario;
    std::string config_path;
    int trials = 0;
    std::uint64_t seed = 0;
    double dt_max = 0.0;
    double tau = 0.0;
    std::vector<double> sample_times;
    std::string out_dir;
};

void add_common_options(CLI::App* cmd, Options& opt) {
    cmd->add_option("--scenario", opt.scenario,
                    "Built-in scenario: example1, example2 or forgetting");
    cmd->add_option("--config", opt.config_path, "Path to a config file");
    cmd->add_option("--trials", opt.trials, "Number of independent trials");
    cmd->add_option("--seed", opt.seed, "RNG seed; omitted means generated and reported");
    cmd->add_option("--dt-max", opt.dt_max, "Greatest substep, in units of tau");
    cmd->add_option("--tau", opt.tau, "Duration of the time unit tau");
    cmd->add_option("--sample-times", opt.sample_times, "Comma-separated times, in units of tau")
        ->delimiter(',');
    cmd->add_option("--out-dir", opt.out_dir, "Directory for the output files");
}

beablesim::RunConfig merge(const CLI::App* cmd, const Options& opt) {
    beablesim::RunConfig config;
    if (cmd->count("--config") > 0) {
        config = beablesim::parse_config_file(opt.config_path);
    }
    if (cmd->count("--scenario") > 0) config.scenario = opt.scenario;
    if (cmd->count("--trials") > 0) config.trials = opt.trials;
    if (cmd->count("--seed") > 0) config.seed = opt.seed;
    if (cmd->count("--dt-max") > 0) config.dt_max = opt.dt_max;
    if (cmd->count("--tau") > 0) config.tau = opt.tau;
    if (cmd->count("--sample-times") > 0) {
        for (const double t : opt.sample_times) {
            if (t < 0.0) {
                throw beablesim::ConfigError("--sample-times entries must be nonnegative");
            }
        }
        config.sample_times = opt.sample_times;
    }
    if (cmd->count("--out-dir") > 0) config.out_dir = opt.out_dir;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for beable (hidden-variable) dynamics under piecewise-constant"
                 " Hamiltonians"};
    app.require_subcommand(1);

    Options opt;
    CLI::App* run =
        app.add_subcommand("run", "Simulate an ensemble; writes trajectories.csv and summary.txt");
    add_common_options(run, opt);
    CLI::App* verify = app.add_subcommand(
        "verify", "Check that the coupling is a von Neumann measurement; print the pointer map");
    add_common_options(verify, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return beablesim::kExitConfigError;
    }

    try {
        const CLI::App* cmd = app.get_subcommands().front();
        const beablesim::RunConfig config = merge(cmd, opt);
        if (cmd == run) {
            return beablesim::cmd_run(config, std::cout, std::cerr);
        }
        return beablesim::cmd_verify(config, std::cout, std::cerr);
    } catch (const beablesim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return beablesim::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return beablesim::kExitRuntimeError;
    }
}
