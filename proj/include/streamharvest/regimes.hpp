#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "equilibrium.hpp"
#include "optimizer.hpp"
#include "two_patch.hpp"

namespace streamharvest {

enum class Regime { DownstreamOnly, UpstreamOnly, BoundaryEither, InteriorOrUnknown };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::DownstreamOnly: return "downstream_only";
    case Regime::UpstreamOnly: return "upstream_only";
    case Regime::BoundaryEither: return "boundary_either";
    case Regime::InteriorOrUnknown: return "interior_or_unknown";
    }
    return "unknown";
}

/// What produced a verdict.
enum class Basis {
    WeightedGrowthAboveUpper,   ///< w > r_M: biomass decreasing in theta
    WeightedGrowthBelowLower,   ///< w < r_m: biomass increasing in theta
    TieThresholdComparison,     ///< homogeneous r compared against r_tie
    BoundaryComparison,         ///< M(0) against M(1) by direct solve
    StrongAdvectionLargeGrowth, ///< r > r_M and q >= 2H: all yield effort downstream
    NumericSweep,               ///< theta sweep of the equilibrium objective
};

inline const char* to_string(Basis b) {
    switch (b) {
    case Basis::WeightedGrowthAboveUpper: return "weighted growth above r_M";
    case Basis::WeightedGrowthBelowLower: return "weighted growth below r_m";
    case Basis::TieThresholdComparison: return "growth rate against r_tie";
    case Basis::BoundaryComparison: return "boundary biomass comparison";
    case Basis::StrongAdvectionLargeGrowth: return "r above r_M with q >= 2H";
    case Basis::NumericSweep: return "numeric sweep";
    }
    return "unknown";
}

struct RegimeVerdict {
    Objective objective;
    Regime regime;
    std::optional<double> theta_star;
    Basis basis;
    /// BoundaryEither with equal objective at both ends; theta_star is then 0.
    bool both_boundaries = false;
    /// Certified open bounds on theta_star (lower < theta_star < upper).
    std::optional<double> theta_lower{};
    std::optional<double> theta_upper{};
};

namespace detail {

inline void require_persistent_everywhere(const TwoPatchScenario& s) {
    if (!persistent_on_grid(s, 101))
        throw DomainError("scenario is not persistent for every theta in [0, 1]");
}

} // namespace detail

/**
 * Biomass-optimal split for equal competition rates. The weighted growth
 * difference w decides monotonicity; in the band r_m <= w <= r_M the optimum
 * is at a boundary, resolved by r against r_tie for homogeneous growth and by
 * solving both boundary equilibria otherwise.
 */
inline RegimeVerdict classify_biomass(const TwoPatchScenario& s) {
    if (!s.equal_competition())
        throw UnsupportedCaseError(
            "biomass regimes need c1 = c2; use the numeric optimizer for unequal competition");
    detail::require_persistent_everywhere(s);
    const ThresholdSet t = thresholds(s);
    RegimeVerdict v{Objective::Biomass, Regime::BoundaryEither, std::nullopt,
                    Basis::BoundaryComparison};
    if (t.w > t.r_M) {
        v.regime = Regime::DownstreamOnly;
        v.theta_star = 0.0;
        v.basis = Basis::WeightedGrowthAboveUpper;
        return v;
    }
    if (t.w < t.r_m) {
        v.regime = Regime::UpstreamOnly;
        v.theta_star = 1.0;
        v.basis = Basis::WeightedGrowthBelowLower;
        return v;
    }
    if (s.homogeneous_patches()) {
        v.basis = Basis::TieThresholdComparison;
        const double r = s.r1();
        if (TwoPatchScenario::nearly_equal(r, t.r_tie))
            v.both_boundaries = true;
        v.theta_star = r < t.r_tie && !v.both_boundaries ? 1.0 : 0.0;
        return v;
    }
    const double m0 = total_biomass(solve_equilibrium(s, 0.0));
    const double m1 = total_biomass(solve_equilibrium(s, 1.0));
    if (std::abs(m0 - m1) < 1e-10 * std::max(std::abs(m0), std::abs(m1)))
        v.both_boundaries = true;
    v.theta_star = m1 > m0 && !v.both_boundaries ? 1.0 : 0.0;
    return v;
}

/**
 * Equal biomass at both ends when r = r_tie (homogeneous patches). Returns
 * (M(0), M(1)).
 */
inline std::pair<double, double> tie_biomass(const TwoPatchScenario& s) {
    if (!s.homogeneous_patches())
        throw UnsupportedCaseError("tie biomass needs homogeneous patches");
    const double r_tie = thresholds(s).r_tie;
    if (std::abs(s.r1() - r_tie) > 1e-12 * std::max(1.0, r_tie))
        throw DomainError("growth rate " + std::to_string(s.r1()) + " differs from r_tie = " +
                          std::to_string(r_tie));
    const auto e0 = detail::persistent_equilibrium(s, 0.0, {});
    const auto e1 = detail::persistent_equilibrium(s, 1.0, {});
    const double m0 = total_biomass(e0), m1 = total_biomass(e1);
    if (!(std::abs(m0 - m1) < 1e-8 * m0))
        throw NumericalError("boundary biomasses differ at r_tie: " + std::to_string(m0) + " vs " +
                             std::to_string(m1));
    return {m0, m1};
}

/**
 * Yield-optimal split for homogeneous patches. Strong advection with large
 * growth sends everything downstream; otherwise the numeric sweep supplies
 * theta_star, together with the certified half-line bounds when r lies
 * outside [r_m, r_M].
 */
inline RegimeVerdict classify_yield(const TwoPatchScenario& s, double resolution = 1e-3) {
    if (!s.homogeneous_patches())
        throw UnsupportedCaseError("yield regimes need homogeneous patches");
    const ThresholdSet t = thresholds(s);
    const double r = s.r1(), q = s.q(), H = s.budget();
    RegimeVerdict v{Objective::Yield, Regime::InteriorOrUnknown, std::nullopt, Basis::NumericSweep};
    if (r > t.r_M && q >= 2.0 * H) {
        v.regime = Regime::DownstreamOnly;
        v.theta_star = 0.0;
        v.basis = Basis::StrongAdvectionLargeGrowth;
        return v;
    }
    if (r > t.r_M)
        v.theta_upper = 0.5;
    else if (r < t.r_m)
        v.theta_lower = 0.5 - q / (2.0 * H);
    v.theta_star = sweep_theta(s, Objective::Yield, resolution).theta_star;
    return v;
}

} // namespace streamharvest
