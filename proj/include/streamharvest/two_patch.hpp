#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "equilibrium.hpp"
#include "model.hpp"

namespace streamharvest {

/// Fraction of the budget placed on the upstream patch: h1 = theta H,
/// h2 = (1 - theta) H.
struct ThetaSplit {
    double theta;

    explicit ThetaSplit(double t) : theta(t) {
        if (!(t >= 0.0 && t <= 1.0))
            throw ArgumentError("theta must lie in [0, 1], got " + std::to_string(t));
    }

    Vector efforts(double budget) const {
        Vector h(2);
        h << theta * budget, (1.0 - theta) * budget;
        return h;
    }
};

/**
 * Two patches on a stream. Patch 1 is upstream: individuals move 1 -> 2 at
 * rate d + q and 2 -> 1 at rate d. The harvest budget H is split by theta.
 */
class TwoPatchScenario {
public:
    TwoPatchScenario(double r1, double r2, double c1, double c2, double d, double q, double budget)
        : r1_(r1), r2_(r2), c1_(c1), c2_(c2), d_(d), q_(q), budget_(budget),
          model_(make_model(r1, r2, c1, c2, d, q)) {
        if (!std::isfinite(r1) || !std::isfinite(r2))
            throw ArgumentError("growth rates must be finite");
        if (!(d > 0.0) || !(q > 0.0) || !(budget > 0.0) || !std::isfinite(d) ||
            !std::isfinite(q) || !std::isfinite(budget))
            throw ArgumentError("d, q and H must be positive and finite");
    }

    /// Homogeneous patches: r1 = r2 = r, c1 = c2 = c.
    static TwoPatchScenario homogeneous(double r, double c, double d, double q, double budget) {
        return TwoPatchScenario(r, r, c, c, d, q, budget);
    }

    /// Recognizes a two-patch model whose downstream rate a21 exceeds the
    /// upstream rate a12 > 0.
    static std::optional<TwoPatchScenario> from_model(const Model& m, double budget) {
        if (m.size() != 2)
            return std::nullopt;
        const double up = m.movement()(0, 1);   // 2 -> 1
        const double down = m.movement()(1, 0); // 1 -> 2
        if (!(up > 0.0) || !(down > up))
            return std::nullopt;
        return TwoPatchScenario(m.growth()(0), m.growth()(1), m.competition()(0),
                                m.competition()(1), up, down - up, budget);
    }

    double r1() const noexcept { return r1_; }
    double r2() const noexcept { return r2_; }
    double c1() const noexcept { return c1_; }
    double c2() const noexcept { return c2_; }
    double d() const noexcept { return d_; }
    double q() const noexcept { return q_; }
    double budget() const noexcept { return budget_; }
    const Model& model() const noexcept { return model_; }

    Vector efforts(double theta) const { return ThetaSplit(theta).efforts(budget_); }

    bool equal_competition() const noexcept { return nearly_equal(c1_, c2_); }
    bool homogeneous_patches() const noexcept {
        return equal_competition() && nearly_equal(r1_, r2_);
    }

    TwoPatchScenario with_growth(double r) const {
        return TwoPatchScenario(r, r, c1_, c2_, d_, q_, budget_);
    }

    static bool nearly_equal(double a, double b) noexcept {
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    }

private:
    static Model make_model(double r1, double r2, double c1, double c2, double d, double q) {
        Vector r(2), c(2);
        r << r1, r2;
        c << c1, c2;
        Matrix a(2, 2);
        a << 0.0, d, d + q, 0.0;
        return Model(r, c, a);
    }

    double r1_, r2_, c1_, c2_, d_, q_, budget_;
    Model model_;
};

/// Critical growth rates of the two-patch system.
struct ThresholdSet {
    double r_crit; ///< sufficient persistence level for the d/(2d+q)-weighted growth
    double r_m;    ///< below: biomass increases with theta
    double r_M;    ///< above: biomass decreases with theta
    double r_tie;  ///< homogeneous case: equal biomass at theta = 0 and 1
    double w;      ///< weighted growth difference compared against r_m and r_M
};

inline ThresholdSet thresholds(const TwoPatchScenario& s) {
    const double d = s.d(), q = s.q(), H = s.budget();
    const double sd = std::sqrt(d), sdq = std::sqrt(d + q);
    const double gap = sdq - sd;
    ThresholdSet t{};
    t.r_crit = H * (d + q) / (2.0 * d + q);
    t.r_M = 2.0 * d + q + H * sdq / gap;
    t.r_m = 2.0 * d + q - H * sd / gap;
    t.r_tie = 2.0 * d + q + 0.5 * H;
    t.w = (s.r1() * sdq - s.r2() * sd) / gap;
    return t;
}

/// Persistence guaranteed for every theta when the stationary-distribution
/// weighted growth exceeds r_crit.
inline bool persistence_guaranteed(const TwoPatchScenario& s) {
    const double d = s.d(), q = s.q();
    const double mean = (d * s.r1() + (d + q) * s.r2()) / (2.0 * d + q);
    return mean > thresholds(s).r_crit;
}

/// Spectral bound of the zero state checked on an evenly spaced theta grid.
inline bool persistent_on_grid(const TwoPatchScenario& s, int points = 101) {
    for (int k = 0; k < points; ++k) {
        const double theta = static_cast<double>(k) / (points - 1);
        if (!(origin_spectral_bound(s.model(), s.efforts(theta)) > 0.0))
            return false;
    }
    return true;
}

inline EquilibriumResult solve_equilibrium(const TwoPatchScenario& s, double theta,
                                           const SolveOptions& opt = {}) {
    return solve_equilibrium(s.model(), s.efforts(theta), opt);
}

namespace detail {

struct TwoPatchSensitivity {
    double det;       // determinant of the linear system for (u1', u2')
    double imbalance; // (d + q) u1^2 - d u2^2
};

inline TwoPatchSensitivity two_patch_sensitivity(const TwoPatchScenario& s, double u1, double u2) {
    const double d = s.d(), dq = s.d() + s.q();
    const double a11 = -(s.c1() * u1 * u1 + d * u2);
    const double a12 = d * u1;
    const double a21 = dq * u2;
    const double a22 = -(s.c2() * u2 * u2 + dq * u1);
    return {a11 * a22 - a12 * a21, dq * u1 * u1 - d * u2 * u2};
}

inline EquilibriumResult persistent_equilibrium(const TwoPatchScenario& s, double theta,
                                                const SolveOptions& opt) {
    EquilibriumResult eq = solve_equilibrium(s, theta, opt);
    if (!eq.persistent)
        throw DomainError("no positive equilibrium at theta = " + std::to_string(theta));
    return eq;
}

} // namespace detail

/// dM/dtheta of the equilibrium biomass M = u1 + u2, from implicit
/// differentiation of the equilibrium equations.
inline double biomass_derivative(const TwoPatchScenario& s, double theta,
                                 const SolveOptions& opt = {}) {
    const EquilibriumResult eq = detail::persistent_equilibrium(s, theta, opt);
    const double u1 = eq.u(0), u2 = eq.u(1), H = s.budget();
    const auto [det, imbalance] = detail::two_patch_sensitivity(s, u1, u2);
    if (!(det > 0.0))
        throw NumericalError("sensitivity determinant is not positive", eq.u, theta);
    return -(H * (u1 + u2) * imbalance + H * u1 * u1 * u2 * u2 * (s.c2() - s.c1())) / det;
}

/// dY/dtheta of the equilibrium yield Y = theta H u1 + (1 - theta) H u2.
/// Only derived for homogeneous patches.
inline double yield_derivative(const TwoPatchScenario& s, double theta,
                               const SolveOptions& opt = {}) {
    if (!s.homogeneous_patches())
        throw UnsupportedCaseError("yield derivative is only available for homogeneous patches");
    const EquilibriumResult eq = detail::persistent_equilibrium(s, theta, opt);
    const double u1 = eq.u(0), u2 = eq.u(1), H = s.budget(), c = s.c1(), q = s.q();
    const auto [det, imbalance] = detail::two_patch_sensitivity(s, u1, u2);
    if (!(det > 0.0))
        throw NumericalError("sensitivity determinant is not positive", eq.u, theta);
    const double split = H * (1.0 - 2.0 * theta);
    const double local = (split - q) / c + split * c * u1 * u1 * u2 * u2 / det;
    const double transport =
        imbalance * (1.0 / (c * u1 * u2) + H * (theta * u1 + (1.0 - theta) * u2) / det);
    return H * (local - transport);
}

} // namespace streamharvest
