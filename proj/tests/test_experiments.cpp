#include <doctest.h>

#include <cmath>
#include <numbers>

#include "beablesim/experiments.hpp"
#include "test_support.hpp"

using namespace beablesim;
using testsupport::max_abs_diff;
using testsupport::same_up_to_phase;

namespace {

const double kPi = std::numbers::pi;

// The common target: +, - inputs keep the apparatus pointer aligned with the
// system value, written out in the product basis (++, +-, -+, --).
Matrix target_unitary() {
    Matrix t = Matrix::Zero(4, 4);
    t(0, 0) = 1;
    t(1, 1) = 1;
    t(3, 2) = 1;
    t(2, 3) = -1;
    return t;
}

} // namespace

TEST_CASE("scenario registry") {
    CHECK(scenario_names() == std::vector<std::string>{"example1", "example2", "forgetting"});
    for (const std::string& name : scenario_names()) {
        Scenario sc = make_scenario(name, 1.0);
        CHECK(sc.name == name);
        CHECK_FALSE(sc.expected_outcome.empty());
        CHECK(std::abs(sc.initial_state.probabilities().sum() - 1.0) < 1e-12);
    }
    CHECK_THROWS_WITH_AS(make_scenario("nope", 1.0),
                         "unknown scenario \"nope\" (known: example1, example2, forgetting)",
                         Error);
    CHECK_THROWS_AS(make_scenario("example1", 0.0), InvariantError);
}

TEST_CASE("both measurement scenarios implement the same total unitary") {
    const Matrix target = target_unitary();
    for (double tau : {0.5, 1.0, 2.0}) {
        CAPTURE(tau);
        Scenario one = scenario_example1(tau);
        Scenario two = scenario_example2(tau);
        CHECK(one.schedule.segments().size() == 1);
        CHECK(two.schedule.segments().size() == 4);
        CHECK(one.schedule.total_duration() == doctest::Approx(tau));
        CHECK(two.schedule.total_duration() == doctest::Approx(4.0 * tau));
        CHECK(max_abs_diff(total_unitary(one.schedule).entries(), target) < 1e-10);
        CHECK(max_abs_diff(total_unitary(two.schedule).entries(), target) < 1e-10);
    }
}

TEST_CASE("four-pulse scenario: each pulse has its closed form") {
    Scenario sc = scenario_example2(1.0);
    const Schedule& s = sc.schedule;
    const Matrix id4 = Matrix::Identity(4, 4);
    const Matrix sz_sy = tensor_op(pauli(Pauli::Z), pauli(Pauli::Y)).entries();
    const Matrix sx_id = tensor_op(pauli(Pauli::X), pauli(Pauli::Identity)).entries();
    const Matrix id_sy = tensor_op(pauli(Pauli::Identity), pauli(Pauli::Y)).entries();
    const Complex i(0, 1);
    const double r = 1.0 / std::sqrt(2.0);

    auto pulse = [&](int k) {
        const Segment& seg = s.segments()[static_cast<std::size_t>(k)];
        return matrix_exponential_unitary(seg.hamiltonian, seg.duration).entries();
    };
    CHECK(max_abs_diff(pulse(0), r * (id4 + i * sz_sy)) < 1e-10);
    CHECK(max_abs_diff(pulse(1), i * sx_id) < 1e-10);
    CHECK(max_abs_diff(pulse(2), r * (id4 - i * id_sy)) < 1e-10);
    CHECK(max_abs_diff(pulse(3), -i * sx_id) < 1e-10);
}

TEST_CASE("one-pulse scenario is faithful at default and skewed coefficients") {
    Scenario sc = scenario_example1(1.0);
    REQUIRE(sc.measurement.has_value());
    REQUIRE(sc.default_initial_law.kind == InitialBeableLaw::Kind::Born);

    for (const std::vector<Complex>& coeffs :
         {sc.default_system_coefficients, std::vector<Complex>{Complex(0.6, 0), Complex(0.8, 0)}}) {
        FaithfulnessReport report = faithfulness_experiment(*sc.measurement, coeffs,
                                                            sc.default_initial_law, 300, 0.005, 21);
        CHECK(report.faithful_fraction == 1.0);
        CHECK(report.counts.sum() == 300);
    }
}

TEST_CASE("same unitary, opposite verdict: the four-pulse route flips a fixed + start") {
    const std::vector<Complex> coeffs{Complex(1.0 / std::sqrt(2.0), 0),
                                      Complex(1.0 / std::sqrt(2.0), 0)};
    Scenario one = scenario_example1(1.0);
    Scenario two = scenario_example2(1.0);
    REQUIRE(two.default_initial_law.kind == InitialBeableLaw::Kind::Fixed);
    REQUIRE(two.default_initial_law.index == 0);

    FaithfulnessReport direct = faithfulness_experiment(*one.measurement, coeffs,
                                                        InitialBeableLaw::fixed(0), 150, 0.005, 31);
    FaithfulnessReport detour = faithfulness_experiment(*two.measurement, coeffs,
                                                        InitialBeableLaw::fixed(0), 150, 0.005, 31);
    CHECK(direct.faithful_fraction == 1.0);
    CHECK(detour.faithful_fraction == 0.0);
    CHECK(detour.counts(0, 1) == 150);
}

TEST_CASE("four-pulse scenario: beable itinerary from a fixed + start") {
    Scenario sc = scenario_example2(1.0);
    for (int trial = 0; trial < 40; ++trial) {
        RandomStream rng = derive_stream(47, static_cast<std::uint64_t>(trial));
        MeasurementTrial t = run_measurement_trial(*sc.measurement, sc.default_system_coefficients,
                                                   sc.default_initial_law, 0.005, rng,
                                                   {0.5, 1.5, 3.0});
        CHECK(t.measured_system_index == 1);
        for (const TrajectorySample& sample : t.samples) {
            if (sample.t <= 1.0) {
                // the system factor stays + through the first pulse
                CHECK(sc.measurement->system_index_of(sample.beable) == 0);
            }
            if (sample.t == 3.0) {
                CHECK(sample.beable == 1); // parked on +- before the last pulse
            }
        }
        CHECK(t.final_state.beable() == 3); // and driven to -- by its end
    }
}

TEST_CASE("forgetting scenario: the wavefunction visits - and returns") {
    for (double tau : {0.5, 1.0, 2.0}) {
        CAPTURE(tau);
        Scenario sc = scenario_forgetting(tau);
        CHECK_FALSE(sc.measurement.has_value());
        CHECK(sc.schedule.total_duration() == doctest::Approx(8.0 * tau));

        const HermitianOperator& h = sc.schedule.segments()[0].hamiltonian;
        StateVector at_tau = matrix_exponential_unitary(h, tau).apply(sc.initial_state);
        CHECK(same_up_to_phase(at_tau, StateVector::basis_state(2, 1), 1e-12));
        CHECK(max_abs_diff(total_unitary(sc.schedule).entries(), Matrix::Identity(2, 2)) < 1e-10);
    }
}

TEST_CASE("forgetting scenario: every trial passes through - at t = tau") {
    Scenario sc = scenario_forgetting(1.0);
    Eigen::VectorXd at_tau = ensemble_distribution(sc.initial_state, InitialBeableLaw::born(),
                                                   sc.schedule, 1.0, 0.005, 500, 57);
    CHECK(at_tau(0) == 0.0);
    CHECK(at_tau(1) == 1.0);
}

TEST_CASE("decorrelation_test: endpoints decouple under the Born start") {
    CorrelationReport report = decorrelation_test(1.0, 1500, 61);
    CHECK(report.n_trials == 1500);
    CHECK(report.t_early == 0.0);
    CHECK(report.t_late == doctest::Approx(8.0));
    REQUIRE(report.correlation.has_value());
    CHECK(std::abs(*report.correlation) < 0.12);
    // both endpoints are (1/2, 1/2) within sampling noise (5 sigma ~ 0.065)
    CHECK(report.early_frequencies(0) == doctest::Approx(0.5).epsilon(0.14));
    CHECK(report.late_frequencies(0) == doctest::Approx(0.5).epsilon(0.14));

    CorrelationReport again = decorrelation_test(1.0, 1500, 61);
    REQUIRE(again.correlation.has_value());
    CHECK(*again.correlation == *report.correlation);
}

TEST_CASE("decorrelation_test: a degenerate start has no defined correlation") {
    CorrelationReport report = decorrelation_test(1.0, 300, 67, InitialBeableLaw::fixed(0));
    CHECK_FALSE(report.correlation.has_value());
    CHECK(report.early_frequencies(0) == 1.0);
    // the late endpoint still splits: the value at tau forgot the start
    CHECK(report.late_frequencies(0) == doctest::Approx(0.5).epsilon(0.3));

    CHECK_THROWS_AS(decorrelation_test(1.0, 1, 67), InvariantError);
    CHECK_THROWS_AS(decorrelation_test(-1.0, 100, 67), InvariantError);
}
