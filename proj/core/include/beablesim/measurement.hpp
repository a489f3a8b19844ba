#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "beablesim/beable.hpp"
#include "beablesim/hilbert.hpp"
#include "beablesim/schedule.hpp"

namespace beablesim {

/// System/apparatus factorization with an apparatus ready state and a coupling
/// schedule on the product space. Basis order is system-major.
class MeasurementSetup {
public:
    MeasurementSetup(int system_dim, int apparatus_dim, StateVector apparatus_ready,
                     Schedule coupling, BeableBasis system_basis, BeableBasis apparatus_basis);

    int system_dim() const { return system_dim_; }
    int apparatus_dim() const { return apparatus_dim_; }
    int product_dim() const { return system_dim_ * apparatus_dim_; }
    const StateVector& apparatus_ready() const { return apparatus_ready_; }
    const Schedule& coupling() const { return coupling_; }
    const BeableBasis& system_basis() const { return system_basis_; }
    const BeableBasis& apparatus_basis() const { return apparatus_basis_; }
    BeableBasis product_basis() const { return BeableBasis::product(system_basis_, apparatus_basis_); }

    int product_index(int system_index, int apparatus_index) const {
        return system_index * apparatus_dim_ + apparatus_index;
    }
    int system_index_of(int product_index) const { return product_index / apparatus_dim_; }
    int apparatus_index_of(int product_index) const { return product_index % apparatus_dim_; }

    /// Index of the ready state's (unique) support in the apparatus basis, or
    /// an error if the ready state is not an apparatus basis state up to phase.
    int ready_beable_index() const;

private:
    int system_dim_;
    int apparatus_dim_;
    StateVector apparatus_ready_;
    Schedule coupling_;
    BeableBasis system_basis_;
    BeableBasis apparatus_basis_;
};

/// Post-interaction apparatus states |A_i>, one per system basis index,
/// pairwise orthonormal.
class PointerMap {
public:
    explicit PointerMap(std::vector<StateVector> pointers);

    int system_dim() const { return static_cast<int>(pointers_.size()); }
    const StateVector& pointer(int i) const { return pointers_.at(static_cast<std::size_t>(i)); }

    /// System index read off a final apparatus beable value: the unique i whose
    /// pointer state puts its weight on that apparatus index. Throws
    /// ReadoutAmbiguityError when no single i is picked out.
    int decode(int apparatus_beable_index) const;

private:
    std::vector<StateVector> pointers_;
};

/// Outcome of checking that the coupling maps every |psi_i>|A_0> to
/// |psi_i>|A_i> with orthonormal |A_i>.
struct VerificationReport {
    std::optional<PointerMap> pointer_map; // present iff the check passed
    std::string failure;                   // empty iff the check passed
    int violating_index = -1;              // factorization: which i; orthonormality: pair (i, j)
    int violating_index_b = -1;
    double deviation = 0.0;

    bool passed() const { return pointer_map.has_value(); }
};

/// One simulated measurement: the full trajectory record plus readout.
struct MeasurementTrial {
    std::vector<TrajectorySample> samples; // over the product space
    VState final_state;
    int initial_product_index;
    int initial_system_index;
    int measured_system_index;
};

/// Tabulated (initial beable value, measured value) pairs over an ensemble.
struct FaithfulnessReport {
    int n_trials = 0;
    Eigen::MatrixXi counts;       // counts(initial, measured)
    double faithful_fraction = 0; // diagonal mass / n_trials
    std::uint64_t seed = 0;

    Eigen::VectorXd measured_frequencies() const;
    Eigen::VectorXd initial_frequencies() const;
    bool operator==(const FaithfulnessReport& other) const;
};

/// Applies the coupling's total unitary to each |psi_i>|A_0> and checks the
/// result factorizes as |psi_i>|A_i> with pairwise orthonormal |A_i>.
VerificationReport verify_von_neumann(const MeasurementSetup& setup);

/// Runs a single measurement with the beable dynamics: the initial v-state is
/// (sum_i c_i |psi_i>)|A_0> with the bar at (initial_system_index, ready index);
/// the measured value is decoded from the final apparatus beable value.
/// Requires a setup that passes verify_von_neumann and whose ready state is an
/// apparatus basis state.
MeasurementTrial run_measurement(const MeasurementSetup& setup,
                                 const std::vector<Complex>& system_coeffs,
                                 int initial_system_index, double dt_max, RandomStream& rng,
                                 const std::vector<double>& sample_times = {});

/// run_measurement with the initial beable drawn by `law` (Born over the product
/// state, or a fixed system index).
MeasurementTrial run_measurement_trial(const MeasurementSetup& setup,
                                       const std::vector<Complex>& system_coeffs,
                                       const InitialBeableLaw& law, double dt_max,
                                       RandomStream& rng,
                                       const std::vector<double>& sample_times = {});

/// n_trials independent measurements with streams derived from (seed, trial);
/// identical seeds give identical reports.
FaithfulnessReport faithfulness_experiment(const MeasurementSetup& setup,
                                           const std::vector<Complex>& system_coeffs,
                                           const InitialBeableLaw& law, int n_trials,
                                           double dt_max, std::uint64_t seed);

} // namespace beablesim
