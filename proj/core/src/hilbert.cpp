#include "beablesim/hilbert.hpp"

#include <cmath>
#include <string>

#include "beablesim/diagnostics.hpp"

namespace beablesim {

namespace {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw InvariantError(std::string(what) + ": non-finite entry");
    }
}

void check_tensor_dims(int da, int db, int dim_cap) {
    if (da <= 0 || db <= 0) {
        throw DimensionError("tensor product: operands must be nonempty");
    }
    if (da > dim_cap / db) {
        throw DimensionError("tensor product dimension " + std::to_string(da) + "*" +
                             std::to_string(db) + " exceeds cap " + std::to_string(dim_cap));
    }
}

Matrix kron(const Matrix& a, const Matrix& b) {
    const auto ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
    Matrix out(ar * br, ac * bc);
    for (Eigen::Index i = 0; i < ar; ++i) {
        for (Eigen::Index j = 0; j < ac; ++j) {
            out.block(i * br, j * bc, br, bc) = a(i, j) * b;
        }
    }
    return out;
}

} // namespace

StateVector::StateVector(Vector amps) : amps_(std::move(amps)) {
    if (amps_.size() == 0) {
        throw DimensionError("StateVector: dimension must be positive");
    }
    if (!amps_.allFinite()) {
        throw InvariantError("StateVector: non-finite amplitude");
    }
    const double norm2 = amps_.squaredNorm();
    if (std::abs(norm2 - 1.0) > tol::kNorm) {
        throw InvariantError("StateVector: squared norm " + std::to_string(norm2) +
                             " is not 1 within " + std::to_string(tol::kNorm));
    }
}

StateVector StateVector::basis_state(int dim, int index) {
    if (index < 0 || index >= dim) {
        throw DimensionError("basis_state: index out of range");
    }
    Vector v = Vector::Zero(dim);
    v(index) = 1.0;
    return StateVector(std::move(v));
}

StateVector StateVector::normalized(const Vector& amps) {
    const double n = amps.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvariantError("normalized: vector has no finite positive norm");
    }
    return StateVector(amps / n);
}

Eigen::VectorXd StateVector::probabilities() const {
    return amps_.cwiseAbs2();
}

Complex StateVector::inner(const StateVector& other) const {
    if (dim() != other.dim()) {
        throw DimensionError("inner: dimension mismatch");
    }
    return amps_.dot(other.amps_); // Eigen's dot conjugates the left argument
}

HermitianOperator::HermitianOperator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
        throw DimensionError("HermitianOperator: matrix must be square and nonempty");
    }
    require_finite(entries_, "HermitianOperator");
    const double defect = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    if (defect > tol::kHermitian) {
        throw InvariantError("HermitianOperator: Hermiticity defect " + std::to_string(defect));
    }
}

HermitianOperator HermitianOperator::zero(int dim) {
    return HermitianOperator(Matrix::Zero(dim, dim));
}

bool HermitianOperator::is_diagonal(double tol) const {
    Matrix off = entries_;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() <= tol;
}

UnitaryOperator::UnitaryOperator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
        throw DimensionError("UnitaryOperator: matrix must be square and nonempty");
    }
    require_finite(entries_, "UnitaryOperator");
    const Matrix gram = entries_.adjoint() * entries_;
    const double defect = (gram - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
    if (defect > tol::kUnitary) {
        throw InvariantError("UnitaryOperator: unitarity defect " + std::to_string(defect));
    }
}

UnitaryOperator UnitaryOperator::identity(int dim) {
    return UnitaryOperator(Matrix::Identity(dim, dim), Unchecked{});
}

StateVector UnitaryOperator::apply(const StateVector& psi) const {
    if (dim() != psi.dim()) {
        throw DimensionError("apply: operator dim " + std::to_string(dim()) +
                             " vs state dim " + std::to_string(psi.dim()));
    }
    Vector out = entries_ * psi.amps();
    const double norm2 = out.squaredNorm();
    if (std::abs(norm2 - 1.0) > tol::kNorm) {
        diagnostics::record_renormalization();
        out /= std::sqrt(norm2);
    }
    return StateVector(std::move(out), StateVector::Unchecked{});
}

UnitaryOperator UnitaryOperator::compose(const UnitaryOperator& other) const {
    if (dim() != other.dim()) {
        throw DimensionError("compose: dimension mismatch");
    }
    return UnitaryOperator(entries_ * other.entries_);
}

HermitianOperator pauli(Pauli axis) {
    Matrix m(2, 2);
    const Complex i{0.0, 1.0};
    switch (axis) {
    case Pauli::Identity: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, -i, i, 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
    }
    return HermitianOperator(std::move(m));
}

HermitianOperator tensor_op(const HermitianOperator& a, const HermitianOperator& b, int dim_cap) {
    check_tensor_dims(a.dim(), b.dim(), dim_cap);
    return HermitianOperator(kron(a.entries(), b.entries()));
}

UnitaryOperator tensor_op(const UnitaryOperator& a, const UnitaryOperator& b, int dim_cap) {
    check_tensor_dims(a.dim(), b.dim(), dim_cap);
    return UnitaryOperator(kron(a.entries(), b.entries()));
}

StateVector tensor_state(const StateVector& a, const StateVector& b, int dim_cap) {
    check_tensor_dims(a.dim(), b.dim(), dim_cap);
    Vector out(a.dim() * b.dim());
    for (int i = 0; i < a.dim(); ++i) {
        out.segment(i * b.dim(), b.dim()) = a.amp(i) * b.amps();
    }
    return StateVector(std::move(out));
}

UnitaryOperator matrix_exponential_unitary(const HermitianOperator& h, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvariantError("matrix_exponential_unitary: t must be finite and >= 0");
    }
    if (t == 0.0) {
        return UnitaryOperator::identity(h.dim());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries());
    if (es.info() != Eigen::Success) {
        throw Error("matrix_exponential_unitary: eigendecomposition failed");
    }
    const Eigen::VectorXd& lambda = es.eigenvalues();
    Vector phases(h.dim());
    for (int k = 0; k < h.dim(); ++k) {
        phases(k) = std::polar(1.0, -lambda(k) * t);
    }
    Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    // Exact up to roundoff in the eigendecomposition; skip the O(n^3) recheck.
    return UnitaryOperator(std::move(u), UnitaryOperator::Unchecked{});
}

StateVector apply(const UnitaryOperator& u, const StateVector& psi) {
    return u.apply(psi);
}

} // namespace beablesim
