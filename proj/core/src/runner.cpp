#include "beablesim/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "beablesim/measurement.hpp"

namespace beablesim {

namespace {

std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string fmt12_complex(Complex z) {
    return "[" + fmt12(z.real()) + ", " + fmt12(z.imag()) + "]";
}

std::uint64_t generate_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
}

struct TrialRecord {
    std::vector<TrajectorySample> samples;
    int final_index = -1;
    int initial_system = -1; // measurement runs only
    int measured = -1;       // measurement runs only
};

Scenario build_or_config_error(const RunConfig& config) {
    try {
        return build_scenario(config);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> absolute_sample_times(const RunConfig& config, const Scenario& sc) {
    const double total = sc.schedule.total_duration();
    std::vector<double> out;
    out.reserve(config.sample_times.size());
    for (const double t : config.sample_times) {
        out.push_back(std::clamp(t * config.tau, 0.0, total));
    }
    return out;
}

std::vector<TrialRecord> execute(const Scenario& sc, const RunConfig& config,
                                 std::uint64_t seed) {
    const double dt_abs = config.dt_max * config.tau;
    const std::vector<double> samples_abs = absolute_sample_times(config, sc);
    std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));

    if (sc.measurement) {
        const MeasurementSetup& setup = *sc.measurement;
        for_each_trial(config.trials, [&](int trial) {
            RandomStream rng = derive_stream(seed, static_cast<std::uint64_t>(trial));
            MeasurementTrial t =
                run_measurement_trial(setup, sc.default_system_coefficients,
                                      sc.default_initial_law, dt_abs, rng, samples_abs);
            records[static_cast<std::size_t>(trial)] =
                TrialRecord{std::move(t.samples), t.final_state.beable(),
                            t.initial_system_index, t.measured_system_index};
        });
    } else {
        for_each_trial(config.trials, [&](int trial) {
            RandomStream rng = derive_stream(seed, static_cast<std::uint64_t>(trial));
            const int v0 = sample_initial_beable(sc.initial_state, sc.default_initial_law, rng);
            const VState start(sc.initial_state, v0);
            TrajectoryResult t = run_trajectory(start, sc.schedule, dt_abs, rng, samples_abs);
            records[static_cast<std::size_t>(trial)] =
                TrialRecord{std::move(t.samples), t.final_state.beable(), -1, -1};
        });
    }
    return records;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    file << text;
    if (!file) {
        throw Error("failed to write " + path.string());
    }
}

std::string trajectories_csv(const std::vector<TrialRecord>& records, const BeableBasis& basis) {
    std::ostringstream out;
    out << "t,trial,beable_index,beable_label\n";
    for (std::size_t trial = 0; trial < records.size(); ++trial) {
        for (const TrajectorySample& s : records[trial].samples) {
            out << fmt12(s.t) << ',' << trial << ',' << s.beable << ',' << basis.label(s.beable)
                << '\n';
        }
    }
    return out.str();
}

std::string contingency_csv(const Eigen::MatrixXi& counts, const BeableBasis& system_basis) {
    std::ostringstream out;
    out << "initial,measured,count\n";
    for (int i = 0; i < counts.rows(); ++i) {
        for (int j = 0; j < counts.cols(); ++j) {
            out << system_basis.label(i) << ',' << system_basis.label(j) << ',' << counts(i, j)
                << '\n';
        }
    }
    return out.str();
}

std::string summary_text(const Scenario& sc, const RunConfig& config, std::uint64_t seed,
                         const std::vector<TrialRecord>& records) {
    const int n = static_cast<int>(records.size());
    std::ostringstream out;
    out << "run summary\n";
    out << "===========\n";
    out << "scenario: " << sc.name << "\n";
    if (!sc.expected_outcome.empty()) {
        out << "expected: " << sc.expected_outcome << "\n";
    }
    out << "trials: " << n << "\n";
    out << "seed: " << seed << "\n";
    out << "tau: " << fmt12(config.tau) << "\n";
    out << "dt_max: " << fmt12(config.dt_max) << " (units of tau)\n";
    out << "schedule: " << sc.schedule.segments().size() << " segment(s), total duration "
        << fmt12(sc.schedule.total_duration() / config.tau) << " (units of tau)\n";

    if (sc.measurement) {
        const MeasurementSetup& setup = *sc.measurement;
        const int sdim = setup.system_dim();
        Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(sdim, sdim);
        for (const TrialRecord& r : records) {
            counts(r.initial_system, r.measured) += 1;
        }
        out << "\nmeasured value frequencies:\n";
        for (int j = 0; j < sdim; ++j) {
            out << "  " << setup.system_basis().label(j) << ": "
                << fmt12(static_cast<double>(counts.col(j).sum()) / n) << "\n";
        }
        out << "initial beable frequencies:\n";
        for (int i = 0; i < sdim; ++i) {
            out << "  " << setup.system_basis().label(i) << ": "
                << fmt12(static_cast<double>(counts.row(i).sum()) / n) << "\n";
        }
        out << "faithful_fraction: "
            << fmt12(static_cast<double>(counts.diagonal().sum()) / n) << "\n";
        out << "contingency counts (row = initial value, column = measured value):\n";
        out << " ";
        for (int j = 0; j < sdim; ++j) out << " " << setup.system_basis().label(j);
        out << "\n";
        for (int i = 0; i < sdim; ++i) {
            out << "  " << setup.system_basis().label(i) << ":";
            for (int j = 0; j < sdim; ++j) out << " " << counts(i, j);
            out << "\n";
        }
    }

    Eigen::VectorXi final_counts = Eigen::VectorXi::Zero(sc.basis.dim());
    for (const TrialRecord& r : records) {
        final_counts(r.final_index) += 1;
    }
    out << "\nfinal beable frequencies:\n";
    for (int i = 0; i < sc.basis.dim(); ++i) {
        out << "  " << sc.basis.label(i) << ": "
            << fmt12(static_cast<double>(final_counts(i)) / n) << "\n";
    }

    out << "\nconfig echo (reproduces this run):\n";
    RunConfig echoed = config;
    echoed.seed = seed;
    std::istringstream lines(serialize_config(echoed));
    std::string line;
    while (std::getline(lines, line)) {
        out << "  " << line << "\n";
    }
    return out.str();
}

} // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const Scenario sc = build_or_config_error(config);
        const std::uint64_t seed = config.seed ? *config.seed : generate_seed();
        const std::vector<TrialRecord> records = execute(sc, config, seed);

        const std::filesystem::path dir(config.out_dir);
        std::filesystem::create_directories(dir);

        const auto traj_path = dir / "trajectories.csv";
        write_text_file(traj_path, trajectories_csv(records, sc.basis));
        out << "wrote " << traj_path.string() << "\n";

        if (sc.measurement) {
            const int sdim = sc.measurement->system_dim();
            Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(sdim, sdim);
            for (const TrialRecord& r : records) counts(r.initial_system, r.measured) += 1;
            const auto cont_path = dir / "contingency.csv";
            write_text_file(cont_path, contingency_csv(counts, sc.measurement->system_basis()));
            out << "wrote " << cont_path.string() << "\n";
        }

        const auto summary_path = dir / "summary.txt";
        write_text_file(summary_path, summary_text(sc, config, seed, records));
        out << "wrote " << summary_path.string() << "\n";
        out << "seed: " << seed << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const Scenario sc = build_or_config_error(config);
        if (!sc.measurement) {
            throw ConfigError("verify needs a measurement run; '" + sc.name +
                              "' has no system/apparatus split");
        }
        const MeasurementSetup& setup = *sc.measurement;
        const VerificationReport report = verify_von_neumann(setup);
        if (!report.passed()) {
            out << "von Neumann check: FAIL\n";
            out << "  " << report.failure << "\n";
            return kExitVerifyFailed;
        }
        out << "von Neumann check: pass\n";
        const PointerMap& pointers = *report.pointer_map;
        for (int i = 0; i < setup.system_dim(); ++i) {
            out << "pointer state for system value " << setup.system_basis().label(i) << ":";
            for (int a = 0; a < setup.apparatus_dim(); ++a) {
                out << " " << fmt12_complex(pointers.pointer(i).amp(a));
            }
            out << "\n";
        }
        for (int a = 0; a < setup.apparatus_dim(); ++a) {
            out << "readout: apparatus " << setup.apparatus_basis().label(a) << " -> ";
            try {
                out << "system " << setup.system_basis().label(pointers.decode(a)) << "\n";
            } catch (const ReadoutAmbiguityError&) {
                out << "(ambiguous)\n";
            }
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

} // namespace beablesim
