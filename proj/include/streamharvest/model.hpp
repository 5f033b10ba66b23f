#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace streamharvest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite())
        throw ArgumentError(std::string(what) + " contains non-finite entries");
}

// Patches reachable from `start` following edges j -> i with a(i, j) > 0
// (forward) or i -> j (reverse).
inline std::vector<bool> reachable(const Matrix& a, Eigen::Index start, bool reverse) {
    const Eigen::Index n = a.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
        const Eigen::Index j = stack.back();
        stack.pop_back();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double rate = reverse ? a(j, i) : a(i, j);
            if (rate > 0.0 && !seen[static_cast<std::size_t>(i)]) {
                seen[static_cast<std::size_t>(i)] = true;
                stack.push_back(i);
            }
        }
    }
    return seen;
}

} // namespace detail

/// True when the directed graph with an edge j -> i for every a(i, j) > 0 is
/// strongly connected. A single patch is trivially irreducible.
inline bool is_irreducible(const Matrix& a) {
    if (a.rows() <= 1)
        return true;
    const auto fwd = detail::reachable(a, 0, false);
    const auto bwd = detail::reachable(a, 0, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

/**
 * Metapopulation of n patches with logistic-type local dynamics
 *
 *   u_i' = u_i (r_i - c_i u_i) - h_i u_i + sum_j (a_ij u_j - a_ji u_i),
 *
 * where a_ij is the movement rate from patch j to patch i. Immutable after
 * construction; the constructor enforces c > 0, a nonnegative movement matrix
 * with zero diagonal, and irreducibility for n >= 2.
 */
class Model {
public:
    Model(Vector r, Vector c, Matrix movement)
        : r_(std::move(r)), c_(std::move(c)), a_(std::move(movement)) {
        const auto n = r_.size();
        if (n < 1)
            throw ArgumentError("model needs at least one patch");
        if (c_.size() != n || a_.rows() != n || a_.cols() != n)
            throw ArgumentError("model dimensions disagree: r has " + std::to_string(n) +
                                " entries, c has " + std::to_string(c_.size()) +
                                ", movement is " + std::to_string(a_.rows()) + "x" +
                                std::to_string(a_.cols()));
        detail::require_finite(r_, "growth rates");
        detail::require_finite(c_, "competition rates");
        if (!a_.allFinite())
            throw ArgumentError("movement matrix contains non-finite entries");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(c_(i) > 0.0))
                throw ArgumentError("competition rate c[" + std::to_string(i) + "] must be positive");
            if (a_(i, i) != 0.0)
                throw ArgumentError("movement matrix diagonal must be zero");
            for (Eigen::Index j = 0; j < n; ++j)
                if (a_(i, j) < 0.0)
                    throw ArgumentError("movement rate a[" + std::to_string(i) + "][" +
                                        std::to_string(j) + "] is negative");
        }
        if (!is_irreducible(a_))
            throw ArgumentError("movement matrix is not irreducible (patch graph not strongly connected)");
        outflow_ = a_.colwise().sum().transpose();
    }

    Eigen::Index size() const noexcept { return r_.size(); }
    const Vector& growth() const noexcept { return r_; }
    const Vector& competition() const noexcept { return c_; }
    const Matrix& movement() const noexcept { return a_; }
    /// Total emigration rate out of each patch, sum_j a_ji.
    const Vector& outflow() const noexcept { return outflow_; }

    /// Copy of this model with every growth rate replaced by `r`.
    Model with_uniform_growth(double r) const {
        return Model(Vector::Constant(size(), r), c_, a_);
    }

private:
    Vector r_;
    Vector c_;
    Matrix a_;
    Vector outflow_;
};

/**
 * Per-patch harvesting effort. The constrained form (the default) requires
 * h >= 0 and sum h = H to within 1e-12 max(1, H). The signed form allows
 * stocking (negative entries) and is only meant for the unconstrained MSY
 * solution.
 */
class HarvestAllocation {
public:
    static HarvestAllocation constrained(Vector h, double budget) {
        detail::require_finite(h, "harvest allocation");
        if (!std::isfinite(budget) || budget < 0.0)
            throw ArgumentError("harvest budget must be finite and nonnegative");
        for (Eigen::Index i = 0; i < h.size(); ++i)
            if (h(i) < 0.0)
                throw ArgumentError("harvest effort h[" + std::to_string(i) + "] is negative");
        if (std::abs(h.sum() - budget) > 1e-12 * std::max(1.0, budget))
            throw ArgumentError("harvest efforts do not sum to the budget");
        return HarvestAllocation(std::move(h), budget, false);
    }

    static HarvestAllocation signed_rates(Vector h) {
        detail::require_finite(h, "harvest allocation");
        const double total = h.sum();
        return HarvestAllocation(std::move(h), total, true);
    }

    /// All budget on the patches in proportion to `weights` (nonnegative, any
    /// positive sum).
    static HarvestAllocation proportional(const Vector& weights, double budget) {
        const double s = weights.sum();
        if (!(s > 0.0))
            throw ArgumentError("allocation weights must have a positive sum");
        Vector h = weights * (budget / s);
        // absorb rounding so the budget identity holds exactly enough
        h(h.size() - 1) += budget - h.sum();
        if (h(h.size() - 1) < 0.0)
            h(h.size() - 1) = 0.0;
        return constrained(std::move(h), budget);
    }

    const Vector& efforts() const noexcept { return h_; }
    double budget() const noexcept { return budget_; }
    bool is_signed() const noexcept { return signed_; }
    Eigen::Index size() const noexcept { return h_.size(); }

private:
    HarvestAllocation(Vector h, double budget, bool is_signed)
        : h_(std::move(h)), budget_(budget), signed_(is_signed) {}

    Vector h_;
    double budget_;
    bool signed_;
};

namespace detail {

inline void check_dims(const Model& m, const Vector& h, const Vector& u) {
    if (h.size() != m.size() || u.size() != m.size())
        throw ArgumentError("vector length mismatch: model has " + std::to_string(m.size()) +
                            " patches, h has " + std::to_string(h.size()) + ", u has " +
                            std::to_string(u.size()));
}

} // namespace detail

/// Time derivative of the densities.
inline Vector rhs(const Model& m, const Vector& h, const Vector& u) {
    detail::check_dims(m, h, u);
    const auto& r = m.growth();
    const auto& c = m.competition();
    Vector f = m.movement() * u;
    f.array() += u.array() * (r.array() - c.array() * u.array() - h.array() - m.outflow().array());
    return f;
}

/// Jacobian of rhs with respect to u. At u = 0 this is the Metzler matrix
/// whose spectral bound decides persistence.
inline Matrix jacobian(const Model& m, const Vector& h, const Vector& u) {
    detail::check_dims(m, h, u);
    Matrix j = m.movement();
    j.diagonal() = m.growth() - h - 2.0 * m.competition().cwiseProduct(u) - m.outflow();
    return j;
}

/// Net movement into each patch, sum_j (a_ij u_j - a_ji u_i). Sums to zero.
inline Vector exchange(const Model& m, const Vector& u) {
    if (u.size() != m.size())
        throw ArgumentError("vector length mismatch in exchange");
    return m.movement() * u - m.outflow().cwiseProduct(u);
}

} // namespace streamharvest
