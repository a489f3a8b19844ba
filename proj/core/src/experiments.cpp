#include "beablesim/experiments.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace beablesim {

namespace {

constexpr double kPi = std::numbers::pi;

HermitianOperator scaled(double factor, const HermitianOperator& h) {
    return HermitianOperator(factor * h.entries());
}

void require_positive_tau(double tau, const char* who) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvariantError(std::string(who) + ": tau must be positive and finite");
    }
}

StateVector equal_superposition2() {
    Vector c(2);
    c << Complex(1, 0), Complex(1, 0);
    return StateVector::normalized(c);
}

Scenario make_two_spin_measurement(std::string name, std::string expected_outcome, double tau,
                                   std::vector<Segment> segments, InitialBeableLaw law) {
    Schedule coupling(std::move(segments));
    const StateVector ready = StateVector::basis_state(2, 0); // apparatus |+>
    MeasurementSetup setup(2, 2, ready, coupling, BeableBasis::spin_half(),
                           BeableBasis::spin_half());
    const double r = 1.0 / std::sqrt(2.0);
    std::vector<Complex> coeffs{Complex(r, 0), Complex(r, 0)};
    Vector c(2);
    c << coeffs[0], coeffs[1];
    StateVector psi0 = tensor_state(StateVector(std::move(c)), ready);
    return Scenario{
        .name = std::move(name),
        .expected_outcome = std::move(expected_outcome),
        .tau = tau,
        .measurement = std::move(setup),
        .default_system_coefficients = std::move(coeffs),
        .schedule = std::move(coupling),
        .initial_state = std::move(psi0),
        .basis = BeableBasis::product(BeableBasis::spin_half(), BeableBasis::spin_half()),
        .default_initial_law = law,
    };
}

} // namespace

Scenario scenario_example1(double tau) {
    require_positive_tau(tau, "scenario_example1");
    // (1 - sz) projects onto the system |->, so only that branch drives the
    // apparatus; one pulse of length tau rotates its pointer |+> into |->.
    const HermitianOperator coupling_term = tensor_op(
        HermitianOperator(Matrix::Identity(2, 2) - pauli(Pauli::Z).entries()), pauli(Pauli::Y));
    std::vector<Segment> segments;
    segments.emplace_back(tau, scaled(kPi / (4.0 * tau), coupling_term));
    return make_two_spin_measurement(
        "example1", "measured value equals the initial system beable value in every trial",
        tau, std::move(segments), InitialBeableLaw::born());
}

Scenario scenario_example2(double tau) {
    require_positive_tau(tau, "scenario_example2");
    const HermitianOperator sz_sy = tensor_op(pauli(Pauli::Z), pauli(Pauli::Y));
    const HermitianOperator sx_id = tensor_op(pauli(Pauli::X), pauli(Pauli::Identity));
    const HermitianOperator id_sy = tensor_op(pauli(Pauli::Identity), pauli(Pauli::Y));
    std::vector<Segment> segments;
    segments.emplace_back(tau, scaled(-kPi / (4.0 * tau), sz_sy));
    segments.emplace_back(tau, scaled(-kPi / (2.0 * tau), sx_id));
    segments.emplace_back(tau, scaled(kPi / (4.0 * tau), id_sy));
    segments.emplace_back(tau, scaled(kPi / (2.0 * tau), sx_id));
    return make_two_spin_measurement(
        "example2",
        "measured value is - in every trial regardless of the initial system beable value",
        tau, std::move(segments), InitialBeableLaw::fixed(0));
}

Scenario scenario_forgetting(double tau) {
    require_positive_tau(tau, "scenario_forgetting");
    std::vector<Segment> segments;
    segments.emplace_back(8.0 * tau, scaled(kPi / (4.0 * tau), pauli(Pauli::Y)));
    return Scenario{
        .name = "forgetting",
        .expected_outcome = "beable value is - at t = tau in every trial; values at t = 0 and"
                            " t = 8 tau are uncorrelated",
        .tau = tau,
        .measurement = std::nullopt,
        .default_system_coefficients = {},
        .schedule = Schedule(std::move(segments)),
        .initial_state = equal_superposition2(),
        .basis = BeableBasis::spin_half(),
        .default_initial_law = InitialBeableLaw::born(),
    };
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"example1", "example2", "forgetting"};
    return names;
}

Scenario make_scenario(const std::string& name, double tau) {
    if (name == "example1") return scenario_example1(tau);
    if (name == "example2") return scenario_example2(tau);
    if (name == "forgetting") return scenario_forgetting(tau);
    std::string known;
    for (const auto& n : scenario_names()) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw Error("unknown scenario \"" + name + "\" (known: " + known + ")");
}

CorrelationReport decorrelation_test(double tau, int n_trials, std::uint64_t seed,
                                     const InitialBeableLaw& law,
                                     std::optional<double> dt_max) {
    if (n_trials < 2) {
        throw InvariantError("decorrelation_test: need at least two trials");
    }
    const Scenario sc = scenario_forgetting(tau);
    const double dt = dt_max.value_or(tau / 200.0);

    std::vector<std::pair<int, int>> ends(static_cast<std::size_t>(n_trials));
    for_each_trial(n_trials, [&](int trial) {
        RandomStream rng = derive_stream(seed, static_cast<std::uint64_t>(trial));
        const int v0 = sample_initial_beable(sc.initial_state, law, rng);
        const VState start(sc.initial_state, v0);
        TrajectoryResult traj = run_trajectory(start, sc.schedule, dt, rng);
        ends[static_cast<std::size_t>(trial)] = {v0, traj.final_state.beable()};
    });

    CorrelationReport report;
    report.n_trials = n_trials;
    report.seed = seed;
    report.t_early = 0.0;
    report.t_late = sc.schedule.total_duration();
    report.early_frequencies = Eigen::VectorXd::Zero(sc.basis.dim());
    report.late_frequencies = Eigen::VectorXd::Zero(sc.basis.dim());

    // Encode index 0 ("+") as +1 and index 1 ("-") as -1.
    double sum_x = 0, sum_y = 0;
    for (const auto& [v0, v1] : ends) {
        report.early_frequencies(v0) += 1.0;
        report.late_frequencies(v1) += 1.0;
        sum_x += 1.0 - 2.0 * v0;
        sum_y += 1.0 - 2.0 * v1;
    }
    report.early_frequencies /= static_cast<double>(n_trials);
    report.late_frequencies /= static_cast<double>(n_trials);

    const double mean_x = sum_x / n_trials;
    const double mean_y = sum_y / n_trials;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& [v0, v1] : ends) {
        const double dx = (1.0 - 2.0 * v0) - mean_x;
        const double dy = (1.0 - 2.0 * v1) - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx > 0 && syy > 0) {
        report.correlation = sxy / std::sqrt(sxx * syy);
    }
    return report;
}

} // namespace beablesim
