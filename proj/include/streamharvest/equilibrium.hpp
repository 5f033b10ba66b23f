#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "integrate.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace streamharvest {

/**
 * Long-time state of the patch system under a fixed harvest.
 *
 * persistent <=> s_origin > 0. A persistent result has u > 0 and
 * s_equilibrium < 0; otherwise u = 0 and s_equilibrium equals s_origin.
 */
struct EquilibriumResult {
    Vector u;
    double residual = 0.0;
    bool persistent = false;
    double s_origin = 0.0;
    double s_equilibrium = 0.0;
    int newton_iterations = 0;
};

struct SolveOptions {
    /// Newton is tried from here first; on failure the integrate-then-Newton
    /// path is used. Any strictly positive root is the unique positive
    /// equilibrium, so a warm start never changes which state is returned.
    std::optional<Vector> warm_start;
};

namespace detail {

// Size of rounding error in rhs at u: the residual cannot be pushed much below
// a few ulps of the largest term.
inline double residual_floor(const Model& m, const Vector& h, const Vector& u) {
    const Vector terms = (m.growth() - h).cwiseAbs().cwiseProduct(u) +
                         m.competition().cwiseProduct(u.cwiseAbs2()) + m.movement() * u +
                         m.outflow().cwiseProduct(u);
    return 64.0 * std::numeric_limits<double>::epsilon() * terms.maxCoeff();
}

inline double newton_tolerance(const Model& m, const Vector& h, const Vector& u) {
    return std::max(1e-12 * (1.0 + u.maxCoeff()), residual_floor(m, h, u));
}

struct NewtonOutcome {
    Vector u;
    double residual;
    int iterations;
};

// Damped Newton on rhs(u) = 0: halve the step (at most 60 times) until the
// max-norm residual decreases and the iterate stays nonnegative.
inline NewtonOutcome newton(const Model& m, const Vector& h, Vector u, int max_iterations = 200) {
    auto norm = [&](const Vector& x) { return rhs(m, h, x).lpNorm<Eigen::Infinity>(); };
    double res = norm(u);
    if (!std::isfinite(res))
        throw NumericalError("non-finite residual at Newton start", u);
    for (int it = 0; it < max_iterations; ++it) {
        const bool converged = res < newton_tolerance(m, h, u);
        const Vector f = rhs(m, h, u);
        const Vector delta = jacobian(m, h, u).partialPivLu().solve(-f);
        if (!delta.allFinite()) {
            if (converged)
                return {u, res, it};
            throw NumericalError("singular Jacobian in Newton iteration", u);
        }
        bool improved = false;
        double step = 1.0;
        for (int halving = 0; halving <= 60; ++halving, step *= 0.5) {
            Vector trial = u + step * delta;
            if ((trial.array() < 0.0).any())
                continue;
            const double trial_res = norm(trial);
            if (trial_res < res) {
                u = std::move(trial);
                res = trial_res;
                improved = true;
                break;
            }
        }
        if (converged)
            return {u, res, it + 1}; // one polishing step past tolerance
        if (!improved) {
            // Deterministic iteration: a failed line search repeats forever.
            throw NumericalError("Newton stagnated at residual " + std::to_string(res), u);
        }
    }
    if (res < newton_tolerance(m, h, u))
        return {u, res, max_iterations};
    throw NumericalError("Newton did not converge (residual " + std::to_string(res) + ")", u);
}

inline EquilibriumResult finish(const Model& m, const Vector& h, NewtonOutcome out, double s0) {
    if (!((out.u.array() > 0.0).all()))
        throw NumericalError("Newton converged to a non-positive state", out.u);
    EquilibriumResult eq;
    eq.s_origin = s0;
    eq.persistent = true;
    eq.s_equilibrium = spectral_bound(jacobian(m, h, out.u));
    if (!(eq.s_equilibrium < 0.0))
        throw NumericalError("equilibrium found is not linearly stable", out.u);
    eq.u = std::move(out.u);
    eq.residual = out.residual;
    eq.newton_iterations = out.iterations;
    return eq;
}

} // namespace detail

/// Spectral bound of the Jacobian at the zero state.
inline double origin_spectral_bound(const Model& m, const Vector& h) {
    if (h.size() != m.size())
        throw ArgumentError("harvest vector length does not match the model");
    return spectral_bound(jacobian(m, h, Vector::Zero(m.size())));
}

/**
 * Positive equilibrium when the zero state is unstable, zero otherwise.
 * Cold path: integrate from u0 = max(r, 1)/c over min(50/|s0|, 1e4) time
 * units, then polish with damped Newton until the residual is below
 * 1e-12 (1 + max u).
 */
inline EquilibriumResult solve_equilibrium(const Model& m, const Vector& h,
                                           const SolveOptions& opt = {}) {
    const double s0 = origin_spectral_bound(m, h);
    if (!h.allFinite())
        throw ArgumentError("harvest vector contains non-finite entries");
    if (!(s0 > 0.0)) {
        EquilibriumResult eq;
        eq.u = Vector::Zero(m.size());
        eq.s_origin = s0;
        eq.s_equilibrium = s0;
        return eq;
    }

    if (opt.warm_start && opt.warm_start->size() == m.size() &&
        (opt.warm_start->array() > 0.0).all()) {
        try {
            return detail::finish(m, h, detail::newton(m, h, *opt.warm_start, 50), s0);
        } catch (const NumericalError&) {
            // fall through to the cold path
        }
    }

    const Vector u0 = m.growth().cwiseMax(1.0).cwiseQuotient(m.competition());
    const double t_end = std::min(50.0 / std::abs(s0), 1e4);
    const double stiffness = jacobian(m, h, u0).diagonal().cwiseAbs().maxCoeff();
    IntegrateOptions io;
    io.record = false;
    const Trajectory traj = integrate(m, h, u0, t_end, 0.1 / std::max(1.0, stiffness), io);
    Vector start = traj.final_state();
    // Components can only be zero here through clipping; nudge them back into
    // the open orthant so Newton starts from a positive state.
    for (Eigen::Index i = 0; i < start.size(); ++i)
        if (start(i) <= 0.0)
            start(i) = 1e-8 * u0(i);
    return detail::finish(m, h, detail::newton(m, h, std::move(start)), s0);
}

inline EquilibriumResult solve_equilibrium(const Model& m, const HarvestAllocation& alloc,
                                           const SolveOptions& opt = {}) {
    return solve_equilibrium(m, alloc.efforts(), opt);
}

inline double total_biomass(const EquilibriumResult& eq) {
    return eq.persistent ? eq.u.sum() : 0.0;
}

inline double total_yield(const EquilibriumResult& eq, const Vector& h) {
    if (h.size() != eq.u.size())
        throw ArgumentError("harvest vector length does not match the equilibrium");
    return eq.persistent ? h.dot(eq.u) : 0.0;
}

inline double total_yield(const EquilibriumResult& eq, const HarvestAllocation& alloc) {
    return total_yield(eq, alloc.efforts());
}

enum class Objective { Biomass, Yield };

inline const char* to_string(Objective o) {
    return o == Objective::Biomass ? "biomass" : "yield";
}

inline double objective_value(const EquilibriumResult& eq, const Vector& h, Objective o) {
    return o == Objective::Biomass ? total_biomass(eq) : total_yield(eq, h);
}

/// Unconstrained maximum sustainable yield: rates may be negative (stocking).
struct MsySolution {
    HarvestAllocation h;
    Vector u;
    double yield;

    /// Patches where the optimal rate is negative.
    std::vector<Eigen::Index> stocking_patches() const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index i = 0; i < h.size(); ++i)
            if (h.efforts()(i) < 0.0)
                out.push_back(i);
        return out;
    }
    bool requires_stocking() const { return !stocking_patches().empty(); }
};

/**
 * Harvest rates that hold every patch at r_i/(2 c_i), which maximizes
 * sum_i (r_i u_i - c_i u_i^2) = sum_i h_i u_i over all equilibria:
 *
 *   h_i = r_i/2 + sum_j (a_ij (r_j/c_j) / (r_i/c_i) - a_ji).
 */
inline MsySolution msy_unconstrained(const Model& m) {
    const auto& r = m.growth();
    const auto& c = m.competition();
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!(r(i) > 0.0))
            throw DomainError("unconstrained MSY needs every growth rate positive (r[" +
                              std::to_string(i) + "] = " + std::to_string(r(i)) + ")");
    const Vector k = r.cwiseQuotient(c);
    Vector h = 0.5 * r + (m.movement() * k).cwiseQuotient(k) - m.outflow();
    Vector u = 0.5 * k;
    const double yield = (r.cwiseAbs2().cwiseQuotient(c)).sum() / 4.0;

    const double scale = std::max(1.0, r.cwiseAbs2().cwiseQuotient(c).maxCoeff());
    const double res = rhs(m, h, u).lpNorm<Eigen::Infinity>();
    if (!(res < 1e-10 * scale))
        throw NumericalError("MSY rates do not balance the target equilibrium (residual " +
                             std::to_string(res) + ")", u);
    return {HarvestAllocation::signed_rates(std::move(h)), std::move(u), yield};
}

} // namespace streamharvest
