#include "beablesim/measurement.hpp"

#include <cmath>
#include <string>

namespace beablesim {

namespace {

constexpr double kReadoutTol = 1e-9;

MeasurementTrial run_verified_measurement(const MeasurementSetup& setup,
                                          const PointerMap& pointers,
                                          const std::vector<Complex>& system_coeffs,
                                          const InitialBeableLaw& law, double dt_max,
                                          RandomStream& rng,
                                          const std::vector<double>& sample_times) {
    if (static_cast<int>(system_coeffs.size()) != setup.system_dim()) {
        throw DimensionError("run_measurement: need one coefficient per system basis state");
    }
    Vector c(setup.system_dim());
    for (int i = 0; i < setup.system_dim(); ++i) c(i) = system_coeffs[static_cast<std::size_t>(i)];
    const StateVector system_state{std::move(c)}; // enforces sum |c|^2 = 1
    const StateVector psi0 = tensor_state(system_state, setup.apparatus_ready());
    const int ready_index = setup.ready_beable_index();

    int initial_product = -1;
    if (law.kind == InitialBeableLaw::Kind::Fixed) {
        if (law.index < 0 || law.index >= setup.system_dim()) {
            throw DimensionError("run_measurement: initial system beable index out of range");
        }
        initial_product = setup.product_index(law.index, ready_index);
    } else {
        initial_product = sample_initial_beable(psi0, InitialBeableLaw::born(), rng);
    }

    const VState v0(psi0, initial_product); // rejects zero-amplitude initial product index
    TrajectoryResult traj = run_trajectory(v0, setup.coupling(), dt_max, rng, sample_times);

    const int final_apparatus = setup.apparatus_index_of(traj.final_state.beable());
    const int measured = pointers.decode(final_apparatus);

    return MeasurementTrial{std::move(traj.samples), std::move(traj.final_state),
                            initial_product, setup.system_index_of(initial_product), measured};
}

} // namespace

MeasurementSetup::MeasurementSetup(int system_dim, int apparatus_dim, StateVector apparatus_ready,
                                   Schedule coupling, BeableBasis system_basis,
                                   BeableBasis apparatus_basis)
    : system_dim_(system_dim), apparatus_dim_(apparatus_dim),
      apparatus_ready_(std::move(apparatus_ready)), coupling_(std::move(coupling)),
      system_basis_(std::move(system_basis)), apparatus_basis_(std::move(apparatus_basis)) {
    if (system_dim_ <= 0 || apparatus_dim_ <= 0) {
        throw DimensionError("MeasurementSetup: dimensions must be positive");
    }
    if (coupling_.dim() != system_dim_ * apparatus_dim_) {
        throw DimensionError("MeasurementSetup: coupling dimension " + std::to_string(coupling_.dim()) +
                             " != system*apparatus = " + std::to_string(system_dim_ * apparatus_dim_));
    }
    if (apparatus_ready_.dim() != apparatus_dim_) {
        throw DimensionError("MeasurementSetup: ready state lives on the apparatus factor");
    }
    if (system_basis_.dim() != system_dim_ || apparatus_basis_.dim() != apparatus_dim_) {
        throw DimensionError("MeasurementSetup: basis label counts do not match dimensions");
    }
}

int MeasurementSetup::ready_beable_index() const {
    int best = 0;
    for (int k = 1; k < apparatus_dim_; ++k) {
        if (apparatus_ready_.probability(k) > apparatus_ready_.probability(best)) best = k;
    }
    if (apparatus_ready_.probability(best) < 1.0 - tol::kNorm) {
        throw InvariantError(
            "MeasurementSetup: apparatus ready state is not an apparatus beable eigenstate");
    }
    return best;
}

PointerMap::PointerMap(std::vector<StateVector> pointers) : pointers_(std::move(pointers)) {
    if (pointers_.empty()) {
        throw DimensionError("PointerMap: empty");
    }
    for (std::size_t i = 0; i < pointers_.size(); ++i) {
        for (std::size_t j = i; j < pointers_.size(); ++j) {
            const double overlap = std::abs(pointers_[i].inner(pointers_[j]));
            const double expected = (i == j) ? 1.0 : 0.0;
            if (std::abs(overlap - expected) > tol::kEndToEnd) {
                throw InvariantError("PointerMap: pointer states " + std::to_string(i) + ", " +
                                     std::to_string(j) + " are not orthonormal");
            }
        }
    }
}

int PointerMap::decode(int apparatus_beable_index) const {
    int best = 0;
    int runner_up = -1;
    for (int i = 1; i < system_dim(); ++i) {
        const double w = pointers_[static_cast<std::size_t>(i)].probability(apparatus_beable_index);
        if (w > pointers_[static_cast<std::size_t>(best)].probability(apparatus_beable_index)) {
            runner_up = best;
            best = i;
        } else if (runner_up < 0 ||
                   w > pointers_[static_cast<std::size_t>(runner_up)].probability(apparatus_beable_index)) {
            runner_up = i;
        }
    }
    const double w_best = pointers_[static_cast<std::size_t>(best)].probability(apparatus_beable_index);
    if (w_best < kReadoutTol) {
        throw ReadoutAmbiguityError("readout: no pointer state assigns weight to apparatus index " +
                                    std::to_string(apparatus_beable_index));
    }
    if (runner_up >= 0) {
        const double w_second =
            pointers_[static_cast<std::size_t>(runner_up)].probability(apparatus_beable_index);
        if (w_best - w_second < kReadoutTol) {
            throw ReadoutAmbiguityError("readout: apparatus index " +
                                        std::to_string(apparatus_beable_index) +
                                        " does not identify a unique system value");
        }
    }
    return best;
}

Eigen::VectorXd FaithfulnessReport::measured_frequencies() const {
    return counts.cast<double>().colwise().sum().transpose() / static_cast<double>(n_trials);
}

Eigen::VectorXd FaithfulnessReport::initial_frequencies() const {
    return counts.cast<double>().rowwise().sum() / static_cast<double>(n_trials);
}

bool FaithfulnessReport::operator==(const FaithfulnessReport& other) const {
    return n_trials == other.n_trials && seed == other.seed &&
           faithful_fraction == other.faithful_fraction && counts == other.counts;
}

VerificationReport verify_von_neumann(const MeasurementSetup& setup) {
    const UnitaryOperator u = total_unitary(setup.coupling());
    const int adim = setup.apparatus_dim();

    VerificationReport report;
    std::vector<StateVector> pointers;
    pointers.reserve(static_cast<std::size_t>(setup.system_dim()));

    for (int i = 0; i < setup.system_dim(); ++i) {
        const StateVector in =
            tensor_state(StateVector::basis_state(setup.system_dim(), i), setup.apparatus_ready());
        const StateVector out = u.apply(in);
        // Factorized as |psi_i>|A_i> iff all weight sits in the system-i block;
        // that weight is exactly the fidelity of the factorized form.
        const Vector block = out.amps().segment(i * adim, adim);
        const double weight = block.squaredNorm();
        if (1.0 - weight > tol::kEndToEnd) {
            report.failure = "system state " + std::to_string(i) +
                             " does not stay fixed (factorization fidelity " +
                             std::to_string(weight) + ")";
            report.violating_index = i;
            report.deviation = 1.0 - weight;
            return report;
        }
        pointers.push_back(StateVector::normalized(block));
    }

    for (int i = 0; i < setup.system_dim(); ++i) {
        for (int j = i + 1; j < setup.system_dim(); ++j) {
            const double overlap = std::abs(pointers[static_cast<std::size_t>(i)].inner(
                pointers[static_cast<std::size_t>(j)]));
            if (overlap > tol::kEndToEnd) {
                report.failure = "pointer states " + std::to_string(i) + " and " +
                                 std::to_string(j) + " are not orthogonal (|overlap| = " +
                                 std::to_string(overlap) + ")";
                report.violating_index = i;
                report.violating_index_b = j;
                report.deviation = overlap;
                return report;
            }
        }
    }

    report.pointer_map = PointerMap(std::move(pointers));
    return report;
}

MeasurementTrial run_measurement(const MeasurementSetup& setup,
                                 const std::vector<Complex>& system_coeffs,
                                 int initial_system_index, double dt_max, RandomStream& rng,
                                 const std::vector<double>& sample_times) {
    return run_measurement_trial(setup, system_coeffs, InitialBeableLaw::fixed(initial_system_index),
                                 dt_max, rng, sample_times);
}

MeasurementTrial run_measurement_trial(const MeasurementSetup& setup,
                                       const std::vector<Complex>& system_coeffs,
                                       const InitialBeableLaw& law, double dt_max,
                                       RandomStream& rng,
                                       const std::vector<double>& sample_times) {
    const VerificationReport verification = verify_von_neumann(setup);
    if (!verification.passed()) {
        throw InvariantError("run_measurement: coupling is not a von Neumann measurement: " +
                             verification.failure);
    }
    return run_verified_measurement(setup, *verification.pointer_map, system_coeffs, law, dt_max,
                                    rng, sample_times);
}

FaithfulnessReport faithfulness_experiment(const MeasurementSetup& setup,
                                           const std::vector<Complex>& system_coeffs,
                                           const InitialBeableLaw& law, int n_trials,
                                           double dt_max, std::uint64_t seed) {
    if (n_trials < 1) {
        throw InvariantError("faithfulness_experiment: need at least one trial");
    }
    const VerificationReport verification = verify_von_neumann(setup);
    if (!verification.passed()) {
        throw InvariantError("faithfulness_experiment: coupling is not a von Neumann measurement: " +
                             verification.failure);
    }
    const PointerMap& pointers = *verification.pointer_map;

    std::vector<std::pair<int, int>> outcomes(static_cast<std::size_t>(n_trials));
    for_each_trial(n_trials, [&](int trial) {
        RandomStream rng = derive_stream(seed, static_cast<std::uint64_t>(trial));
        const MeasurementTrial result =
            run_verified_measurement(setup, pointers, system_coeffs, law, dt_max, rng, {});
        outcomes[static_cast<std::size_t>(trial)] = {result.initial_system_index,
                                                     result.measured_system_index};
    });

    FaithfulnessReport report;
    report.n_trials = n_trials;
    report.seed = seed;
    report.counts = Eigen::MatrixXi::Zero(setup.system_dim(), setup.system_dim());
    for (const auto& [initial, measured] : outcomes) {
        report.counts(initial, measured) += 1;
    }
    report.faithful_fraction =
        static_cast<double>(report.counts.diagonal().sum()) / static_cast<double>(n_trials);
    return report;
}

} // namespace beablesim
