#include "beablesim/beable.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "beablesim/diagnostics.hpp"

namespace beablesim {

namespace {

// Safety valve against pathological configurations; far above any sane run.
constexpr std::uint64_t kMaxSubsteps = 50'000'000;

void require_normalized(const StateVector& psi) {
    // StateVector enforces this at construction; re-checked here because the
    // rate formula divides by |c_k|^2 and silently wrong inputs would not throw.
    const double norm2 = psi.amps().squaredNorm();
    if (std::abs(norm2 - 1.0) > tol::kNorm) {
        throw InvariantError("jump rates: state not normalized");
    }
}

// Exit-rate row without the occupied-row diagnostics; shared by jump_rates.
Eigen::VectorXd exit_row(const Vector& amps, const Matrix& h, int k) {
    const int dim = static_cast<int>(amps.size());
    Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
    const double pk = std::norm(amps(k));
    if (pk < tol::kZeroAmplitude) {
        return row;
    }
    for (int j = 0; j < dim; ++j) {
        if (j == k) continue;
        // J(j, k) = 2 Im(conj(c_j) H(j, k) c_k)
        const double current = 2.0 * std::imag(std::conj(amps(j)) * h(j, k) * amps(k));
        if (current > 0.0) row(j) = current / pk;
    }
    return row;
}

int pick_jump(const Eigen::VectorXd& rates, double dt, double u) {
    // Mutually exclusive alternatives against one uniform draw; -1 means stay.
    double cumulative = 0.0;
    for (int j = 0; j < rates.size(); ++j) {
        if (rates(j) <= 0.0) continue;
        cumulative += rates(j) * dt;
        if (u < cumulative) return j;
    }
    return -1;
}

int sample_categorical(const Eigen::VectorXd& weights, double u) {
    const double total = weights.sum();
    double cumulative = 0.0;
    int last_positive = -1;
    for (int i = 0; i < weights.size(); ++i) {
        if (weights(i) <= 0.0) continue;
        last_positive = i;
        cumulative += weights(i);
        if (u * total < cumulative) return i;
    }
    return last_positive; // u rounded past the top of the cumulative sum
}

struct SegmentEigen {
    Matrix vectors;
    Eigen::VectorXd values;

    explicit SegmentEigen(const HermitianOperator& h) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries());
        if (es.info() != Eigen::Success) {
            throw Error("trajectory: eigendecomposition failed");
        }
        vectors = es.eigenvectors();
        values = es.eigenvalues();
    }

    // phi <- exp(-i lambda dt) phi (the state advanced exactly, in the eigenbasis)
    void advance(Vector& phi, double dt) const {
        for (Eigen::Index k = 0; k < phi.size(); ++k) {
            phi(k) *= std::polar(1.0, -values(k) * dt);
        }
    }
};

// Sorted, deduplicated landing times: 0, every segment boundary, every
// requested sample time. All of them become samples.
std::vector<double> landing_times(const Schedule& s, const std::vector<double>& requested) {
    std::vector<double> times;
    times.push_back(0.0);
    double t = 0.0;
    for (const Segment& seg : s.segments()) {
        t += seg.duration;
        times.push_back(t);
    }
    const double total = t;
    for (double st : requested) {
        if (!(st >= 0.0) || !(st <= total)) {
            throw Error("sample time " + std::to_string(st) + " outside [0, " +
                        std::to_string(total) + "]");
        }
        times.push_back(st);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

} // namespace

BeableBasis::BeableBasis(int dim, std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (dim <= 0 || static_cast<int>(labels_.size()) != dim) {
        throw DimensionError("BeableBasis: need exactly one label per basis index");
    }
}

BeableBasis BeableBasis::indexed(int dim) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) labels.push_back(std::to_string(i));
    return BeableBasis(dim, std::move(labels));
}

BeableBasis BeableBasis::spin_half() {
    return BeableBasis(2, {"+", "-"});
}

BeableBasis BeableBasis::product(const BeableBasis& a, const BeableBasis& b) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(a.dim()) * static_cast<std::size_t>(b.dim()));
    for (const std::string& la : a.labels()) {
        for (const std::string& lb : b.labels()) {
            labels.push_back(la + lb);
        }
    }
    return BeableBasis(a.dim() * b.dim(), std::move(labels));
}

std::optional<int> BeableBasis::index_of(std::string_view label) const {
    for (int i = 0; i < dim(); ++i) {
        if (labels_[static_cast<std::size_t>(i)] == label) return i;
    }
    return std::nullopt;
}

VState::VState(StateVector psi, int beable) : psi_(std::move(psi)), beable_(beable) {
    if (beable_ < 0 || beable_ >= psi_.dim()) {
        throw DimensionError("VState: beable index out of range");
    }
    if (psi_.probability(beable_) <= tol::kZeroAmplitude) {
        throw InvariantError("VState: beable index " + std::to_string(beable_) +
                             " has no amplitude in the expansion");
    }
}

namespace detail {
VState make_vstate_unchecked(StateVector psi, int beable) {
    return VState(std::move(psi), beable, VState::Unchecked{});
}
} // namespace detail

JumpRateMatrix::JumpRateMatrix(Eigen::MatrixXd rates) : rates_(std::move(rates)) {
    if (rates_.rows() == 0 || rates_.rows() != rates_.cols()) {
        throw DimensionError("JumpRateMatrix: matrix must be square and nonempty");
    }
    if ((rates_.array() < 0.0).any()) {
        throw InvariantError("JumpRateMatrix: negative rate");
    }
    if (rates_.diagonal().cwiseAbs().maxCoeff() != 0.0) {
        throw InvariantError("JumpRateMatrix: nonzero diagonal");
    }
}

double probability_current(const StateVector& psi, const HermitianOperator& h, int i, int j) {
    if (psi.dim() != h.dim()) {
        throw DimensionError("probability_current: dimension mismatch");
    }
    return 2.0 * std::imag(std::conj(psi.amp(i)) * h.entry(i, j) * psi.amp(j));
}

JumpRateMatrix jump_rates(const StateVector& psi, const HermitianOperator& h) {
    if (psi.dim() != h.dim()) {
        throw DimensionError("jump_rates: dimension mismatch");
    }
    require_normalized(psi);
    const int dim = psi.dim();
    Eigen::MatrixXd rates(dim, dim);
    for (int k = 0; k < dim; ++k) {
        rates.row(k) = exit_row(psi.amps(), h.entries(), k);
    }
    return JumpRateMatrix(std::move(rates));
}

Eigen::VectorXd exit_rates(const StateVector& psi, const HermitianOperator& h, int k) {
    if (psi.dim() != h.dim()) {
        throw DimensionError("exit_rates: dimension mismatch");
    }
    if (k < 0 || k >= psi.dim()) {
        throw DimensionError("exit_rates: index out of range");
    }
    if (psi.probability(k) < tol::kZeroAmplitude) {
        diagnostics::record_zero_amplitude_row();
    }
    return exit_row(psi.amps(), h.entries(), k);
}

VState step(const VState& v, const HermitianOperator& h, double dt, RandomStream& rng) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvariantError("step: dt must be strictly positive and finite");
    }
    const Eigen::VectorXd rates = exit_rates(v.psi(), h, v.beable());
    const double budget = rates.sum() * dt;
    if (budget > kJumpBudget) {
        throw Error("step: jump budget " + std::to_string(budget) + " exceeds " +
                    std::to_string(kJumpBudget) + "; use smaller substeps");
    }
    int beable = v.beable();
    if (budget > 0.0) {
        const int dest = pick_jump(rates, dt, rng.uniform());
        if (dest >= 0) beable = dest;
    }
    StateVector advanced = matrix_exponential_unitary(h, dt).apply(v.psi());
    return detail::make_vstate_unchecked(std::move(advanced), beable);
}

TrajectoryResult run_trajectory(const VState& v, const Schedule& s, double dt_max,
                                RandomStream& rng, const std::vector<double>& sample_times) {
    if (!(dt_max > 0.0) || !std::isfinite(dt_max)) {
        throw InvariantError("run_trajectory: dt_max must be strictly positive and finite");
    }
    if (v.psi().dim() != s.dim()) {
        throw DimensionError("run_trajectory: state and schedule dimensions differ");
    }

    const std::vector<double> landings = landing_times(s, sample_times);

    std::vector<TrajectorySample> samples;
    samples.reserve(landings.size());

    Vector amps = v.psi().amps();
    int beable = v.beable();
    samples.push_back({0.0, beable, amps.cwiseAbs2()});

    int seg_index = -1;
    double seg_end = 0.0;
    std::optional<SegmentEigen> eig;
    Vector phi;
    std::uint64_t substeps = 0;

    for (std::size_t li = 1; li < landings.size(); ++li) {
        const double a = landings[li - 1];
        const double b = landings[li];

        // (a, b] never straddles a boundary: boundaries are landing times.
        while (a >= seg_end && seg_index + 1 < static_cast<int>(s.segments().size())) {
            if (eig) amps = eig->vectors * phi; // materialize before switching basis
            ++seg_index;
            seg_end += s.segments()[static_cast<std::size_t>(seg_index)].duration;
            eig.emplace(s.segments()[static_cast<std::size_t>(seg_index)].hamiltonian);
            phi = eig->vectors.adjoint() * amps;
        }
        const Matrix& h = s.segments()[static_cast<std::size_t>(seg_index)].hamiltonian.entries();

        double t = a;
        while (t < b) {
            if (++substeps > kMaxSubsteps) {
                throw Error("run_trajectory: substep budget exhausted");
            }
            amps = eig->vectors * phi;
            const Eigen::VectorXd rates = exit_row(amps, h, beable);
            if (std::norm(amps(beable)) < tol::kZeroAmplitude) {
                diagnostics::record_zero_amplitude_row();
            }
            const double total_rate = rates.sum();
            const double remaining = b - t;
            double dt = std::min(dt_max, remaining);
            if (total_rate > 0.0) {
                dt = std::min(dt, kJumpBudget / total_rate);
            }
            if (total_rate > 0.0) {
                const int dest = pick_jump(rates, dt, rng.uniform());
                if (dest >= 0) beable = dest;
            }
            eig->advance(phi, dt);
            t = (dt == remaining) ? b : t + dt;
        }

        amps = eig ? Vector(eig->vectors * phi) : amps;
        samples.push_back({b, beable, amps.cwiseAbs2()});
    }

    if (eig) amps = eig->vectors * phi;
    StateVector final_psi(std::move(amps));
    return TrajectoryResult{std::move(samples),
                            detail::make_vstate_unchecked(std::move(final_psi), beable)};
}

std::vector<TrajectorySample> evolve(const VState& v, const Schedule& s, double dt_max,
                                     RandomStream& rng, const std::vector<double>& sample_times) {
    return run_trajectory(v, s, dt_max, rng, sample_times).samples;
}

int sample_initial_beable(const StateVector& psi, const InitialBeableLaw& law, RandomStream& rng) {
    if (law.kind == InitialBeableLaw::Kind::Fixed) {
        if (law.index < 0 || law.index >= psi.dim()) {
            throw DimensionError("initial beable index out of range");
        }
        return law.index;
    }
    return sample_categorical(psi.probabilities(), rng.uniform());
}

Eigen::VectorXd ensemble_distribution(const StateVector& psi0, const InitialBeableLaw& law,
                                      const Schedule& s, double t, double dt_max, int n,
                                      std::uint64_t seed) {
    if (n < 1) {
        throw InvariantError("ensemble_distribution: need at least one trial");
    }
    std::vector<int> at_t(static_cast<std::size_t>(n));
    for_each_trial(n, [&](int trial) {
        RandomStream rng = derive_stream(seed, static_cast<std::uint64_t>(trial));
        const VState v(psi0, sample_initial_beable(psi0, law, rng));
        const TrajectoryResult result = run_trajectory(v, s, dt_max, rng, {t});
        for (const TrajectorySample& sample : result.samples) {
            if (sample.t == t) {
                at_t[static_cast<std::size_t>(trial)] = sample.beable;
                break;
            }
        }
    });
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(psi0.dim());
    for (int b : at_t) freq(b) += 1.0;
    return freq / static_cast<double>(n);
}

void for_each_trial(int n, const std::function<void(int)>& body) {
    if (n <= 0) return;
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers = std::min<int>(static_cast<int>(hw > 0 ? hw : 1), std::max(1, n / 64));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
        const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
        threads.emplace_back([&, begin, end] {
            try {
                for (int i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace beablesim
