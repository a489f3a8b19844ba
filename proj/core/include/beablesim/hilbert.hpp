#pragma once

#include <complex>
#include <Eigen/Dense>

#include "beablesim/errors.hpp"

namespace beablesim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Tolerance ladder: construction invariants are algebraic identities and get
// the tightest bound; evolution may accumulate roundoff; end-to-end
// comparisons accumulate everything.
namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kUnitary = 1e-10;
inline constexpr double kNorm = 1e-9;
inline constexpr double kEndToEnd = 1e-8;
inline constexpr double kZeroAmplitude = 1e-12; // |c|^2 below this counts as absent
} // namespace tol

/// Default cap on the dimension produced by tensor products.
inline constexpr int kDefaultDimCap = 64;

/// Normalized amplitude vector over a fixed ordered basis. Immutable.
class StateVector {
public:
    /// Rejects non-finite entries and squared norms off 1 by more than tol::kNorm.
    explicit StateVector(Vector amps);

    /// Builds the i-th basis vector.
    static StateVector basis_state(int dim, int index);

    /// Scales an arbitrary nonzero vector to unit norm.
    static StateVector normalized(const Vector& amps);

    int dim() const { return static_cast<int>(amps_.size()); }
    const Vector& amps() const { return amps_; }
    Complex amp(int i) const { return amps_(i); }

    /// |c_i|^2
    double probability(int i) const { return std::norm(amps_(i)); }

    /// All |c_i|^2 as a real vector.
    Eigen::VectorXd probabilities() const;

    Complex inner(const StateVector& other) const; // <this|other>

private:
    struct Unchecked {};
    StateVector(Vector amps, Unchecked) : amps_(std::move(amps)) {}
    friend class UnitaryOperator;

    Vector amps_;
};

/// Dense Hermitian matrix, entries in units of 1/time (hbar = 1).
class HermitianOperator {
public:
    /// Rejects matrices whose Hermiticity defect exceeds tol::kHermitian.
    explicit HermitianOperator(Matrix entries);

    static HermitianOperator zero(int dim);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& entries() const { return entries_; }
    Complex entry(int i, int j) const { return entries_(i, j); }

    bool is_diagonal(double tol = tol::kHermitian) const;

private:
    Matrix entries_;
};

/// Dense unitary matrix.
class UnitaryOperator {
public:
    /// Rejects matrices with max |U^dag U - I| entry above tol::kUnitary.
    explicit UnitaryOperator(Matrix entries);

    static UnitaryOperator identity(int dim);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& entries() const { return entries_; }

    /// U * psi. Renormalizes (and records a diagnostic) only if the norm
    /// drifted by more than tol::kNorm.
    StateVector apply(const StateVector& psi) const;

    /// this * other, i.e. `other` acts first.
    UnitaryOperator compose(const UnitaryOperator& other) const;

private:
    struct Unchecked {};
    UnitaryOperator(Matrix entries, Unchecked) : entries_(std::move(entries)) {}
    friend UnitaryOperator matrix_exponential_unitary(const HermitianOperator&, double);

    Matrix entries_;
};

enum class Pauli { Identity, X, Y, Z };

/// Standard 2x2 Pauli matrix in the z eigenbasis, ordered (|+>, |->).
HermitianOperator pauli(Pauli axis);

/// Kronecker product A (x) B, row-major: the left factor indexes the slower
/// (system) slot, so two spins order as (++, +-, -+, --).
HermitianOperator tensor_op(const HermitianOperator& a, const HermitianOperator& b,
                            int dim_cap = kDefaultDimCap);
UnitaryOperator tensor_op(const UnitaryOperator& a, const UnitaryOperator& b,
                          int dim_cap = kDefaultDimCap);

/// Kronecker product of states, same ordering convention as tensor_op.
StateVector tensor_state(const StateVector& a, const StateVector& b,
                         int dim_cap = kDefaultDimCap);

/// exp(-i H t) via eigendecomposition of the Hermitian argument. t >= 0.
UnitaryOperator matrix_exponential_unitary(const HermitianOperator& h, double t);

/// Free-function form of UnitaryOperator::apply.
StateVector apply(const UnitaryOperator& u, const StateVector& psi);

} // namespace beablesim
