#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "beablesim/beable.hpp"
#include "beablesim/measurement.hpp"
#include "beablesim/schedule.hpp"

namespace beablesim {

/// A named, ready-to-run configuration: drive schedule, initial wavefunction,
/// basis labels, and (for measurement scenarios) the system/apparatus split.
struct Scenario {
    std::string name;
    std::string expected_outcome; // documented expectation, echoed in reports
    double tau = 1.0;             // time unit the schedule was built from

    std::optional<MeasurementSetup> measurement;      // present for measurement scenarios
    std::vector<Complex> default_system_coefficients; // empty for plain scenarios

    Schedule schedule;         // full-space evolution (the coupling, for measurements)
    StateVector initial_state; // full-space wavefunction at the defaults
    BeableBasis basis;         // full-space labels
    InitialBeableLaw default_initial_law; // Fixed refers to the system factor when
                                          // `measurement` is present
};

/// Two spins, one pulse: the apparatus pointer follows the system value and
/// the measured value always equals the initial system beable. Faithful.
Scenario scenario_example1(double tau = 1.0);

/// Same total unitary as example1, built from four pulses whose intermediate
/// states drag the system beable to the opposite value. Unfaithful.
Scenario scenario_example2(double tau = 1.0);

/// Single driven spin that passes through |-> at t = tau and returns to the
/// start by 8 tau; the beable value after tau carries no memory of the value
/// before. Not a measurement scenario.
Scenario scenario_forgetting(double tau = 1.0);

/// Names accepted by make_scenario, in registry order.
const std::vector<std::string>& scenario_names();

/// Builds the named scenario. Throws Error for unknown names.
Scenario make_scenario(const std::string& name, double tau = 1.0);

/// Endpoint statistics for the forgetting run: beable values at t = 0 and
/// t = 8 tau, +1/-1 encoded.
struct CorrelationReport {
    int n_trials = 0;
    std::uint64_t seed = 0;
    double t_early = 0.0;
    double t_late = 0.0;
    std::optional<double> correlation; // absent when either endpoint has zero variance
    Eigen::VectorXd early_frequencies; // empirical distribution over basis indices
    Eigen::VectorXd late_frequencies;
};

/// Runs the forgetting scenario n_trials times and returns the sample
/// correlation between the encoded beable values at the two endpoints.
CorrelationReport decorrelation_test(double tau, int n_trials, std::uint64_t seed,
                                     const InitialBeableLaw& law = InitialBeableLaw::born(),
                                     std::optional<double> dt_max = std::nullopt);

} // namespace beablesim
