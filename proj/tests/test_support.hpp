#pragma once

#include <cmath>

#include "beablesim/beable.hpp"
#include "beablesim/hilbert.hpp"
#include "beablesim/rng.hpp"

namespace testsupport {

using namespace beablesim;

// Independent exp(-i H t): scaling and squaring on the Taylor series, no
// eigendecomposition anywhere. Good to ~1e-13 for the matrices used in tests.
inline Matrix series_exp_minus_iht(const Matrix& h, double t) {
    Matrix a = Complex(0.0, -1.0) * t * h;
    int squarings = 0;
    double norm = a.cwiseAbs().maxCoeff() * static_cast<double>(a.rows());
    while (norm > 0.25) {
        a /= 2.0;
        norm /= 2.0;
        ++squarings;
    }
    Matrix result = Matrix::Identity(a.rows(), a.cols());
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    for (int k = 1; k <= 40; ++k) {
        term = (term * a / static_cast<double>(k)).eval();
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int s = 0; s < squarings; ++s) {
        result = (result * result).eval();
    }
    return result;
}

// Central finite difference of |c_i(t)|^2 at t = 0 under the series propagator.
inline double fd_probability_derivative(const StateVector& psi, const HermitianOperator& h,
                                        int i, double dt = 1e-6) {
    const Matrix u = series_exp_minus_iht(h.entries(), dt);
    const Vector forward = u * psi.amps();
    const Vector backward = u.adjoint() * psi.amps();
    return (std::norm(forward(i)) - std::norm(backward(i))) / (2.0 * dt);
}

inline Matrix random_hermitian(int dim, RandomStream& rng, double scale = 1.0) {
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            a(i, j) = scale * Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
        }
    }
    return 0.5 * (a + a.adjoint());
}

inline Vector random_state_amps(int dim, RandomStream& rng) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        v(i) = Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    }
    if (v.norm() < 1e-6) v(0) = 1.0;
    return v / v.norm();
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return 0.5 * (p - q).cwiseAbs().sum();
}

inline bool same_up_to_phase(const StateVector& a, const StateVector& b,
                             double tolerance = tol::kEndToEnd) {
    return std::abs(std::abs(a.inner(b)) - 1.0) <= tolerance;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace testsupport
