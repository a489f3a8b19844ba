#include <doctest.h>

#include <cmath>
#include <numbers>

#include "beablesim/experiments.hpp"
#include "beablesim/measurement.hpp"
#include "test_support.hpp"

using namespace beablesim;
using testsupport::max_abs_diff;

namespace {

const double kPi = std::numbers::pi;

Matrix kron2(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

MeasurementSetup two_spin_setup(const Matrix& hamiltonian, double duration = 1.0) {
    std::vector<Segment> segs;
    segs.emplace_back(duration, HermitianOperator{hamiltonian});
    return MeasurementSetup(2, 2, StateVector::basis_state(2, 0), Schedule{segs},
                            BeableBasis::spin_half(), BeableBasis::spin_half());
}

} // namespace

TEST_CASE("MeasurementSetup validates its dimensions") {
    Schedule coupling = Schedule::trivial(4);
    StateVector ready = StateVector::basis_state(2, 0);
    CHECK_NOTHROW(MeasurementSetup(2, 2, ready, coupling, BeableBasis::spin_half(),
                                   BeableBasis::spin_half()));
    CHECK_THROWS_AS(MeasurementSetup(2, 3, ready, coupling, BeableBasis::spin_half(),
                                     BeableBasis::indexed(3)),
                    Error); // ready state has dim 2, coupling dim 4 != 6
    CHECK_THROWS_AS(MeasurementSetup(2, 2, StateVector::basis_state(3, 0), coupling,
                                     BeableBasis::spin_half(), BeableBasis::spin_half()),
                    Error);
    CHECK_THROWS_AS(MeasurementSetup(2, 2, ready, coupling, BeableBasis::indexed(3),
                                     BeableBasis::spin_half()),
                    Error);

    MeasurementSetup setup(2, 3, StateVector::basis_state(3, 1), Schedule::trivial(6),
                           BeableBasis::spin_half(), BeableBasis::indexed(3));
    CHECK(setup.product_dim() == 6);
    CHECK(setup.product_index(1, 2) == 5);
    CHECK(setup.system_index_of(5) == 1);
    CHECK(setup.apparatus_index_of(5) == 2);
    CHECK(setup.product_basis().label(5) == "-2");
    CHECK(setup.ready_beable_index() == 1);
}

TEST_CASE("ready_beable_index demands an apparatus basis state") {
    Vector phase(2);
    phase << Complex(0, 0), std::polar(1.0, 0.3);
    MeasurementSetup with_phase(2, 2, StateVector{phase}, Schedule::trivial(4),
                                BeableBasis::spin_half(), BeableBasis::spin_half());
    CHECK(with_phase.ready_beable_index() == 1);

    Vector spread(2);
    spread << Complex(std::sqrt(0.5), 0), Complex(std::sqrt(0.5), 0);
    MeasurementSetup bad(2, 2, StateVector{spread}, Schedule::trivial(4),
                         BeableBasis::spin_half(), BeableBasis::spin_half());
    CHECK_THROWS_AS(bad.ready_beable_index(), InvariantError);
}

TEST_CASE("PointerMap requires orthonormal pointers and decodes basis weights") {
    std::vector<StateVector> good{StateVector::basis_state(2, 0), StateVector::basis_state(2, 1)};
    PointerMap map{good};
    CHECK(map.decode(0) == 0);
    CHECK(map.decode(1) == 1);
    CHECK_THROWS_AS(map.decode(2), Error);

    std::vector<StateVector> overlapping{StateVector::basis_state(2, 0),
                                         StateVector::normalized([] {
                                             Vector v(2);
                                             v << Complex(0.9, 0), Complex(std::sqrt(0.19), 0);
                                             return v;
                                         }())};
    CHECK_THROWS_AS(PointerMap{overlapping}, InvariantError);

    // pointers that do not align with the beable basis cannot be read out
    Vector plus(2), minus(2);
    plus << Complex(std::sqrt(0.5), 0), Complex(std::sqrt(0.5), 0);
    minus << Complex(std::sqrt(0.5), 0), Complex(-std::sqrt(0.5), 0);
    PointerMap diagonal{{StateVector{plus}, StateVector{minus}}};
    CHECK_THROWS_AS(diagonal.decode(0), ReadoutAmbiguityError);
    CHECK_THROWS_AS(diagonal.decode(1), ReadoutAmbiguityError);
}

TEST_CASE("verify_von_neumann accepts the one-pulse coupling and reports its pointers") {
    Scenario sc = scenario_example1(1.0);
    REQUIRE(sc.measurement.has_value());
    VerificationReport report = verify_von_neumann(*sc.measurement);
    REQUIRE(report.passed());
    CHECK(report.failure.empty());

    const PointerMap& map = *report.pointer_map;
    REQUIRE(map.system_dim() == 2);
    // system + leaves the apparatus in ready; system - flips it
    CHECK(std::abs(std::abs(map.pointer(0).amp(0)) - 1.0) < 1e-10);
    CHECK(std::abs(std::abs(map.pointer(1).amp(1)) - 1.0) < 1e-10);
    CHECK(map.decode(0) == 0);
    CHECK(map.decode(1) == 1);
}

TEST_CASE("verify_von_neumann rejects a coupling that does nothing") {
    MeasurementSetup idle = two_spin_setup(Matrix::Zero(4, 4));
    VerificationReport report = verify_von_neumann(idle);
    CHECK_FALSE(report.passed());
    CHECK_FALSE(report.failure.empty());
    // both pointers equal the ready state: the orthonormality check names the pair
    CHECK(report.violating_index == 0);
    CHECK(report.violating_index_b == 1);
    CHECK(report.deviation == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("verify_von_neumann rejects a coupling that moves the system") {
    // generator sx (x) 1 rotates the system factor itself
    Matrix h = (kPi / 4.0) * kron2(pauli(Pauli::X).entries(), Matrix::Identity(2, 2));
    VerificationReport report = verify_von_neumann(two_spin_setup(h));
    CHECK_FALSE(report.passed());
    CHECK(report.violating_index >= 0);
    CHECK(report.deviation > 1e-3);
}

TEST_CASE("a verified coupling whose pointers are not basis states fails only at readout") {
    // theta = pi/4 entangles into orthonormal pointers (1, 1)/sqrt2, (1, -1)/sqrt2
    Matrix h = -(kPi / 4.0) * kron2(pauli(Pauli::Z).entries(), pauli(Pauli::Y).entries());
    MeasurementSetup setup = two_spin_setup(h);
    VerificationReport report = verify_von_neumann(setup);
    REQUIRE(report.passed());

    RandomStream rng(7);
    CHECK_THROWS_AS(
        run_measurement(setup, {Complex(1, 0), Complex(0, 0)}, 0, 0.005, rng),
        ReadoutAmbiguityError);
}

TEST_CASE("run_measurement on the one-pulse coupling reads back the initial value") {
    Scenario sc = scenario_example1(1.0);
    const std::vector<Complex> coeffs{Complex(std::sqrt(0.5), 0), Complex(std::sqrt(0.5), 0)};
    for (int initial : {0, 1}) {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            RandomStream rng(seed);
            MeasurementTrial trial =
                run_measurement(*sc.measurement, coeffs, initial, 0.005, rng, {0.5});
            CHECK(trial.initial_system_index == initial);
            CHECK(trial.measured_system_index == initial);
            CHECK(trial.initial_product_index == sc.measurement->product_index(initial, 0));
            CHECK(trial.samples.size() == 3); // 0, 0.5, 1
        }
    }
}

TEST_CASE("run_measurement rejects invalid inputs") {
    Scenario sc = scenario_example1(1.0);
    RandomStream rng(1);
    const std::vector<Complex> coeffs{Complex(1, 0), Complex(0, 0)};

    CHECK_THROWS_AS(run_measurement(*sc.measurement, {Complex(1, 0)}, 0, 0.005, rng), Error);
    CHECK_THROWS_AS(run_measurement(*sc.measurement, coeffs, 2, 0.005, rng), Error);
    // no amplitude on system index 1
    CHECK_THROWS_AS(run_measurement(*sc.measurement, coeffs, 1, 0.005, rng), Error);

    // a coupling that is not a measurement is rejected before running
    MeasurementSetup idle = two_spin_setup(Matrix::Zero(4, 4));
    CHECK_THROWS_AS(run_measurement(idle, coeffs, 0, 0.005, rng), InvariantError);
}

TEST_CASE("system-conserving couplings are always faithful") {
    // any generator of the form |0><0| (x) A + |1><1| (x) B keeps the system
    // value frozen; when the two apparatus branches end up orthonormal the
    // readout must reproduce the initial value every time
    RandomStream param_rng(2024);
    for (int draw = 0; draw < 4; ++draw) {
        const double phi = 2.0 * kPi * param_rng.uniform();
        const double a = 2.0 * param_rng.uniform() - 1.0;
        const double b = 2.0 * param_rng.uniform() - 1.0;

        Matrix h = Matrix::Zero(4, 4);
        h(0, 0) = a;
        h(1, 1) = b;
        h.block(2, 2, 2, 2) = (kPi / 2.0) * (std::sin(phi) * pauli(Pauli::X).entries() +
                                             std::cos(phi) * pauli(Pauli::Y).entries());
        MeasurementSetup setup = two_spin_setup(h);
        REQUIRE(verify_von_neumann(setup).passed());

        const double w = 0.2 + 0.6 * param_rng.uniform();
        const std::vector<Complex> coeffs{
            std::polar(std::sqrt(w), 2.0 * kPi * param_rng.uniform()),
            std::polar(std::sqrt(1.0 - w), 2.0 * kPi * param_rng.uniform())};

        FaithfulnessReport report = faithfulness_experiment(
            setup, coeffs, InitialBeableLaw::born(), 150, 0.005, 1000 + static_cast<std::uint64_t>(draw));
        CAPTURE(phi);
        CHECK(report.faithful_fraction == 1.0);
        CHECK(report.counts.sum() == 150);
    }
}

TEST_CASE("faithfulness_experiment tabulates and reproduces exactly") {
    Scenario sc = scenario_example1(1.0);
    const std::vector<Complex> coeffs{Complex(0.6, 0), Complex(0, 0.8)};

    FaithfulnessReport a =
        faithfulness_experiment(*sc.measurement, coeffs, InitialBeableLaw::born(), 400, 0.005, 11);
    FaithfulnessReport b =
        faithfulness_experiment(*sc.measurement, coeffs, InitialBeableLaw::born(), 400, 0.005, 11);
    CHECK(a == b);
    CHECK(a.n_trials == 400);
    CHECK(a.faithful_fraction == 1.0);
    CHECK(a.counts(0, 1) == 0);
    CHECK(a.counts(1, 0) == 0);
    CHECK(a.counts.sum() == 400);
    CHECK(a.measured_frequencies().sum() == doctest::Approx(1.0));
    // Born draw over |0.6|^2 / |0.8|^2, a loose 5-sigma band
    CHECK(a.initial_frequencies()(0) == doctest::Approx(0.36).epsilon(0.35));

    FaithfulnessReport c =
        faithfulness_experiment(*sc.measurement, coeffs, InitialBeableLaw::born(), 400, 0.005, 12);
    CHECK_FALSE(a == c);
}

TEST_CASE("the four-pulse coupling inverts the readout from a fixed start") {
    Scenario sc = scenario_example2(1.0);
    FaithfulnessReport report = faithfulness_experiment(
        *sc.measurement, sc.default_system_coefficients, InitialBeableLaw::fixed(0), 200, 0.005, 5);
    CHECK(report.faithful_fraction == 0.0);
    CHECK(report.counts(0, 1) == 200); // started +, always read back -
    CHECK(report.measured_frequencies()(1) == 1.0);
}
