#pragma once

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "model.hpp"

namespace streamharvest {

inline constexpr Eigen::Index kDenseSpectralLimit = 64;

namespace detail {

inline void require_metzler(const Matrix& m) {
    if (m.rows() != m.cols())
        throw ArgumentError("spectral bound needs a square matrix");
    if (m.rows() == 0)
        throw ArgumentError("spectral bound of an empty matrix");
    if (!m.allFinite())
        throw ArgumentError("matrix contains non-finite entries");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) < 0.0)
                throw ArgumentError("matrix is not Metzler: entry (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") is negative");
}

} // namespace detail

/**
 * Perron root of M + sigma I minus sigma, by power iteration, with
 * sigma = max_i |M_ii| + 1. For an irreducible Metzler matrix the shifted
 * matrix is primitive, so the dominant eigenvalue is simple and real.
 * Converges when successive estimates differ by less than tol max(1, |lambda|).
 */
inline double spectral_bound_power(const Matrix& m, double tol = 1e-10, long max_steps = 100000) {
    detail::require_metzler(m);
    const double sigma = m.diagonal().cwiseAbs().maxCoeff() + 1.0;
    Matrix shifted = m;
    shifted.diagonal().array() += sigma;

    Vector x = Vector::Constant(m.rows(), 1.0 / std::sqrt(static_cast<double>(m.rows())));
    double lambda = 0.0;
    for (long step = 0; step < max_steps; ++step) {
        Vector y = shifted * x;
        const double next = x.dot(y);
        const double norm = y.norm();
        if (norm == 0.0)
            return -sigma;
        x = y / norm;
        if (step > 0 && std::abs(next - lambda) < tol * std::max(1.0, std::abs(next)))
            return next - sigma;
        lambda = next;
    }
    throw NumericalError("power iteration for the spectral bound did not converge", x);
}

/// Largest real part among the eigenvalues of a Metzler matrix.
inline double spectral_bound(const Matrix& m) {
    detail::require_metzler(m);
    const Eigen::Index n = m.rows();
    if (n == 1)
        return m(0, 0);
    if (n == 2) {
        // Off-diagonal product is nonnegative, so both roots are real.
        const double half_gap = 0.5 * (m(0, 0) - m(1, 1));
        return 0.5 * (m(0, 0) + m(1, 1)) + std::sqrt(half_gap * half_gap + m(0, 1) * m(1, 0));
    }
    if (n <= kDenseSpectralLimit) {
        Eigen::EigenSolver<Matrix> solver(m, false);
        if (solver.info() != Eigen::Success)
            throw NumericalError("dense eigensolve failed");
        return solver.eigenvalues().real().maxCoeff();
    }
    return spectral_bound_power(m);
}

} // namespace streamharvest
