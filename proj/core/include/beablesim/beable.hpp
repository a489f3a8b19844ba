#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beablesim/hilbert.hpp"
#include "beablesim/rng.hpp"
#include "beablesim/schedule.hpp"

namespace beablesim {

/// Largest admissible per-substep jump probability (total exit rate * dt).
/// Keeps the first-order jump sampling error at O((rate*dt)^2) per step.
inline constexpr double kJumpBudget = 0.1;

/// Display labels for the fixed ordered basis the beable value indexes into.
class BeableBasis {
public:
    BeableBasis(int dim, std::vector<std::string> labels);

    static BeableBasis indexed(int dim);  // "0", "1", ...
    static BeableBasis spin_half();       // "+", "-"

    /// Product basis, system-major: label(i*b.dim()+j) = a.label(i) + b.label(j).
    static BeableBasis product(const BeableBasis& a, const BeableBasis& b);

    int dim() const { return static_cast<int>(labels_.size()); }
    const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::string>& labels() const { return labels_; }
    std::optional<int> index_of(std::string_view label) const;

private:
    std::vector<std::string> labels_;
};

class VState;
namespace detail {
VState make_vstate_unchecked(StateVector psi, int beable);
}

/// State vector paired with the current beable value (an index into the basis).
class VState {
public:
    /// Rejects indexes whose amplitude is absent (|c|^2 <= tol::kZeroAmplitude).
    VState(StateVector psi, int beable);

    const StateVector& psi() const { return psi_; }
    int beable() const { return beable_; }

private:
    struct Unchecked {};
    VState(StateVector psi, int beable, Unchecked) : psi_(std::move(psi)), beable_(beable) {}
    friend VState detail::make_vstate_unchecked(StateVector, int);

    StateVector psi_;
    int beable_;
};

/// T(i, j) = rate of jumping from occupied index i to index j; units 1/time.
/// Entries are nonnegative, the diagonal is zero, and flow between any pair is
/// one-sided: T(i, j) > 0 forces T(j, i) = 0 when both amplitudes are present.
class JumpRateMatrix {
public:
    explicit JumpRateMatrix(Eigen::MatrixXd rates);

    int dim() const { return static_cast<int>(rates_.rows()); }
    double rate(int i, int j) const { return rates_(i, j); }
    const Eigen::MatrixXd& rates() const { return rates_; }

    /// Total rate of leaving index k.
    double total_exit_rate(int k) const { return rates_.row(k).sum(); }

private:
    Eigen::MatrixXd rates_;
};

struct TrajectorySample {
    double t;
    int beable;
    std::optional<Eigen::VectorXd> probs; // |c_i|^2 at t, for diagnostics
};

struct TrajectoryResult {
    std::vector<TrajectorySample> samples;
    VState final_state;
};

/// How the initial beable value is chosen.
struct InitialBeableLaw {
    enum class Kind { Born, Fixed };
    Kind kind;
    int index = -1;

    static InitialBeableLaw born() { return {Kind::Born}; }
    static InitialBeableLaw fixed(int k) { return {Kind::Fixed, k}; }
};

/// Probability current J(i, j) = 2 Im(conj(c_i) H(i, j) c_j). Antisymmetric for
/// Hermitian H; summed over j it equals d|c_i|^2/dt under the Schroedinger flow.
double probability_current(const StateVector& psi, const HermitianOperator& h, int i, int j);

/// Full rate matrix: T(i, j) = max(J(j, i), 0) / |c_i|^2, and 0 when |c_i|^2
/// vanishes. With this convention an ensemble of beable values distributed as
/// |c_i|^2 stays so distributed (equivariance).
JumpRateMatrix jump_rates(const StateVector& psi, const HermitianOperator& h);

/// Row k of jump_rates, i.e. the exit rates from the occupied index. When the
/// occupied amplitude has decayed below tol::kZeroAmplitude the row is zeroed
/// and a diagnostic is recorded.
Eigen::VectorXd exit_rates(const StateVector& psi, const HermitianOperator& h, int k);

/// One first-order step: with probability T(k, j)*dt the beable moves to j (at
/// most one jump, sampled with a single uniform draw); the state vector
/// advances by exp(-i H dt). Rejects steps whose jump budget exceeds kJumpBudget.
VState step(const VState& v, const HermitianOperator& h, double dt, RandomStream& rng);

/// Advances through the whole schedule with adaptive substeps (dt <= dt_max and
/// exit rate * dt <= kJumpBudget). Segment boundaries are always sample points;
/// requested sample_times must lie in [0, total_duration]. The state vector is
/// advanced exactly per substep; only the jump process is discretized.
TrajectoryResult run_trajectory(const VState& v, const Schedule& s, double dt_max,
                                RandomStream& rng, const std::vector<double>& sample_times = {});

/// run_trajectory, returning only the samples.
std::vector<TrajectorySample> evolve(const VState& v, const Schedule& s, double dt_max,
                                     RandomStream& rng, const std::vector<double>& sample_times = {});

/// Draws an initial beable value for psi under the given law.
int sample_initial_beable(const StateVector& psi, const InitialBeableLaw& law, RandomStream& rng);

/// Empirical distribution of the beable value at time t over n independent
/// trajectories; trial i uses the stream derived from (seed, i), so the result
/// does not depend on execution order.
Eigen::VectorXd ensemble_distribution(const StateVector& psi0, const InitialBeableLaw& law,
                                      const Schedule& s, double t, double dt_max, int n,
                                      std::uint64_t seed);

/// Runs body(i) for i in [0, n), possibly across threads; each index is
/// processed exactly once.
void for_each_trial(int n, const std::function<void(int)>& body);

} // namespace beablesim
