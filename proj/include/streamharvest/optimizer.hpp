#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "equilibrium.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "two_patch.hpp"

namespace streamharvest {

enum class Method { Auto, ThetaSweep, SimplexGrid, ProjectedGradient };

inline const char* to_string(Method m) {
    switch (m) {
    case Method::Auto: return "auto";
    case Method::ThetaSweep: return "theta_sweep";
    case Method::SimplexGrid: return "simplex_grid";
    case Method::ProjectedGradient: return "projected_gradient";
    }
    return "unknown";
}

/// Maximize the equilibrium objective over {h >= 0, sum h = budget}.
struct OptimizationProblem {
    Model model;
    double budget;
    Objective objective = Objective::Biomass;
    Method method = Method::Auto;
    std::uint64_t seed = 42;
    int starts = 8;
};

enum class CertificateKind { GridResolution, ProjectedGradientNorm };

struct LandscapePoint {
    double theta; ///< upstream fraction; NaN for n != 2 grids
    Vector h;
    double biomass;
    double yield;
    bool persistent;

    double value(Objective o) const { return o == Objective::Biomass ? biomass : yield; }
};

struct OptimizationResult {
    HarvestAllocation h_star;
    double value;
    std::size_t evaluations = 0;
    double certificate = 0.0;
    CertificateKind certificate_kind = CertificateKind::GridResolution;
    Method method = Method::Auto;
    std::optional<double> theta_star{};
    std::vector<LandscapePoint> landscape{};
    /// Objective identical at every evaluated point (typically extinct everywhere).
    bool flat = false;
    /// Some interior grid value lies strictly below both neighbours.
    bool interior_local_minimum = false;
};

namespace detail {

struct PointValue {
    double biomass = 0.0;
    double yield = 0.0;
    bool persistent = false;
    Vector u;

    double value(Objective o) const { return o == Objective::Biomass ? biomass : yield; }
};

inline PointValue evaluate_point(const Model& m, const Vector& h, const SolveOptions& opt = {}) {
    const EquilibriumResult eq = solve_equilibrium(m, h, opt);
    PointValue p{total_biomass(eq), total_yield(eq, h), eq.persistent, eq.u};
    if (!std::isfinite(p.biomass) || !std::isfinite(p.yield))
        throw NumericalError("objective is not finite", h);
    return p;
}

// Evaluates every allocation. Points are processed in fixed blocks of 64;
// within a block each solve is warm-started from its predecessor, and blocks
// start cold, so the values do not depend on the number of threads.
inline std::vector<PointValue> evaluate_batch(const Model& m, const std::vector<Vector>& hs,
                                              bool keep_states = false) {
    constexpr std::size_t kBlock = 64;
    std::vector<PointValue> out(hs.size());
    const std::size_t blocks = (hs.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
        SolveOptions opt;
        const std::size_t end = std::min(hs.size(), (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            PointValue p = evaluate_point(m, hs[i], opt);
            opt.warm_start = p.persistent ? std::optional<Vector>(p.u) : std::nullopt;
            if (!keep_states)
                p.u.resize(0);
            out[i] = std::move(p);
        }
    });
    return out;
}

inline bool has_interior_local_minimum(const std::vector<double>& v) {
    for (std::size_t j = 1; j + 1 < v.size(); ++j)
        if (v[j] < v[j - 1] && v[j] < v[j + 1])
            return true;
    return false;
}

// Index of the largest value; ties go to the lowest index.
inline std::size_t argmax_first(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best])
            best = i;
    return best;
}

} // namespace detail

/// Euclidean projection onto {x >= 0, sum x = budget}.
inline Vector project_to_simplex(const Vector& v, double budget) {
    const Eigen::Index n = v.size();
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0, tau = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += sorted[static_cast<std::size_t>(k)];
        const double candidate = (cumulative - budget) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0)
            tau = candidate;
    }
    Vector x = (v.array() - tau).cwiseMax(0.0);
    // Remove rounding drift from the budget identity on the largest entry.
    Eigen::Index imax = 0;
    x.maxCoeff(&imax);
    x(imax) = std::max(0.0, x(imax) + budget - x.sum());
    return x;
}

/**
 * Projection of a gradient onto the tangent cone of the budget simplex at h:
 * components sum to zero and patches with h_i = 0 cannot decrease.
 */
inline Vector tangent_projection(const Vector& g, const Vector& h, double budget) {
    const double active_tol = 1e-14 * std::max(1.0, budget);
    auto component = [&](Eigen::Index i, double mu) {
        const double v = g(i) - mu;
        return h(i) <= active_tol ? std::max(v, 0.0) : v;
    };
    auto total = [&](double mu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i)
            s += component(i, mu);
        return s;
    };
    // total(mu) is nonincreasing; bracket its root and bisect.
    double lo = g.minCoeff() - 1.0, hi = g.maxCoeff() + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) > 0.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    Vector v(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
        v(i) = component(i, mu);
    return v;
}

/**
 * Objective on a uniform theta grid (extinct points score zero), then a
 * golden-section search to width 1e-6 around the best grid point. The grid has
 * N + 1 points with N = ceil(1/resolution), so it always contains both ends.
 */
inline OptimizationResult sweep_theta(const TwoPatchScenario& s, Objective objective,
                                      double resolution) {
    if (!(resolution >= 1e-4 && resolution <= 1e-1))
        throw ArgumentError("theta resolution must lie in [1e-4, 1e-1]");
    const auto intervals = static_cast<std::size_t>(std::ceil(1.0 / resolution - 1e-9));
    const double H = s.budget();
    const Model& m = s.model();

    std::vector<Vector> hs(intervals + 1);
    for (std::size_t j = 0; j <= intervals; ++j) {
        hs[j] = Vector(2);
        hs[j] << H * static_cast<double>(j) / static_cast<double>(intervals),
            H * static_cast<double>(intervals - j) / static_cast<double>(intervals);
    }
    std::vector<detail::PointValue> grid;
    try {
        grid = detail::evaluate_batch(m, hs, true);
    } catch (const NumericalError& e) {
        const double theta = e.best_iterate().size() == 2 ? e.best_iterate()(0) / H
                                                          : std::numeric_limits<double>::quiet_NaN();
        throw NumericalError(std::string(e.what()) + " (theta = " + std::to_string(theta) + ")",
                             e.best_iterate(), theta);
    }

    OptimizationResult res{HarvestAllocation::constrained(hs[0], H), 0.0};
    res.method = Method::ThetaSweep;
    res.certificate = 1.0 / static_cast<double>(intervals);
    res.certificate_kind = CertificateKind::GridResolution;
    std::vector<double> values(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double theta = static_cast<double>(j) / static_cast<double>(intervals);
        values[j] = grid[j].value(objective);
        res.landscape.push_back({theta, hs[j], grid[j].biomass, grid[j].yield, grid[j].persistent});
    }
    res.evaluations = grid.size();
    res.interior_local_minimum = detail::has_interior_local_minimum(values);
    res.flat = *std::max_element(values.begin(), values.end()) ==
               *std::min_element(values.begin(), values.end());

    const std::size_t jbest = detail::argmax_first(values);
    double best_theta = static_cast<double>(jbest) / static_cast<double>(intervals);
    double best_value = values[jbest];
    Vector best_h = hs[jbest];

    if (!res.flat) {
        const double step = 1.0 / static_cast<double>(intervals);
        double a = std::max(0.0, best_theta - step), b = std::min(1.0, best_theta + step);
        SolveOptions warm;
        if (grid[jbest].persistent)
            warm.warm_start = grid[jbest].u;
        auto f = [&](double theta) {
            const Vector h = s.efforts(theta);
            detail::PointValue p;
            try {
                p = detail::evaluate_point(m, h, warm);
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " (theta = " + std::to_string(theta) + ")",
                                     e.best_iterate(), theta);
            }
            ++res.evaluations;
            const double v = p.value(objective);
            if (v > best_value) {
                best_value = v;
                best_theta = theta;
                best_h = h;
            }
            return v;
        };
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while (b - a > 1e-6) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = f(x1);
            }
        }
    }
    res.h_star = HarvestAllocation::constrained(best_h, H);
    res.value = best_value;
    res.theta_star = best_theta;
    return res;
}

/// Number of lattice points H (m_1, ..., m_n)/k with sum m_i = k, i.e.
/// binomial(n + k - 1, n - 1); saturates at UINT64_MAX.
inline std::uint64_t simplex_lattice_size(Eigen::Index n, int k) {
    std::uint64_t result = 1;
    for (Eigen::Index i = 1; i < n; ++i) {
        // result *= (k + i) / i, exactly, since each partial product is a binomial
        const auto num = static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(i);
        if (result > std::numeric_limits<std::uint64_t>::max() / num)
            return std::numeric_limits<std::uint64_t>::max();
        result = result * num / static_cast<std::uint64_t>(i);
    }
    return result;
}

/// All compositions of k into n nonnegative parts, lexicographically ascending.
inline std::vector<std::vector<int>> simplex_lattice(Eigen::Index n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(n), 0);
    auto recurse = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos + 1 == current.size()) {
            current[pos] = remaining;
            out.push_back(current);
            return;
        }
        for (int m = 0; m <= remaining; ++m) {
            current[pos] = m;
            self(self, pos + 1, remaining - m);
        }
    };
    recurse(recurse, 0, k);
    return out;
}

inline constexpr std::uint64_t kMaxLatticePoints = 1'000'000;

/// Brute force over the lattice allocations; ties go to the lexicographically
/// first lattice point.
inline OptimizationResult simplex_grid_search(const OptimizationProblem& p, int k,
                                              bool keep_landscape = false) {
    const Eigen::Index n = p.model.size();
    if (k < 1)
        throw ArgumentError("simplex grid needs at least one subdivision");
    if (n > 5)
        throw ArgumentError("simplex grid search is limited to n <= 5 patches; use projected_gradient");
    if (simplex_lattice_size(n, k) > kMaxLatticePoints)
        throw ArgumentError("simplex grid with k = " + std::to_string(k) +
                            " exceeds 1e6 points; use projected_gradient");
    const double H = p.budget;
    const auto lattice = simplex_lattice(n, k);
    std::vector<Vector> hs(lattice.size());
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        hs[i] = Vector(n);
        for (Eigen::Index j = 0; j < n; ++j)
            hs[i](j) = H * static_cast<double>(lattice[i][static_cast<std::size_t>(j)]) /
                       static_cast<double>(k);
    }
    const auto vals = detail::evaluate_batch(p.model, hs);
    std::vector<double> values(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        values[i] = vals[i].value(p.objective);
    const std::size_t best = detail::argmax_first(values);

    OptimizationResult res{HarvestAllocation::constrained(hs[best], H), values[best]};
    res.method = Method::SimplexGrid;
    res.evaluations = hs.size();
    res.certificate = 1.0 / static_cast<double>(k);
    res.certificate_kind = CertificateKind::GridResolution;
    res.flat = *std::max_element(values.begin(), values.end()) ==
               *std::min_element(values.begin(), values.end());
    if (n == 2)
        res.theta_star = hs[best](0) / H;
    if (keep_landscape) {
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const double theta = n == 2 ? hs[i](0) / H : std::numeric_limits<double>::quiet_NaN();
            res.landscape.push_back({theta, hs[i], vals[i].biomass, vals[i].yield, vals[i].persistent});
        }
    }
    return res;
}

namespace detail {

struct AscentRun {
    Vector h;
    double value;
    double initial_value;
    double pg_norm;
    bool stationary_at_start;
    bool flat_at_start;
    std::size_t evaluations;
};

// Projected-gradient ascent with central-difference gradients (step 1e-5 H,
// forward differences for efforts closer than one step to zero),
// Armijo backtracking (factor 0.5, at most 40 halvings), stopping when the
// projected gradient norm drops below 1e-8 H or after 500 iterations.
inline AscentRun ascend(const Model& m, double budget, Objective obj, Vector h) {
    const double fd_step = 1e-5 * budget;
    const Eigen::Index n = m.size();
    std::size_t evals = 0;
    auto value_at = [&](const Vector& x, const SolveOptions& opt) {
        ++evals;
        return evaluate_point(m, x, opt);
    };

    PointValue here = value_at(h, {});
    const double initial = here.value(obj);
    AscentRun run{h, initial, initial, 0.0, false, false, 0};
    double last_step = -1.0;

    for (int iter = 0; iter < 500; ++iter) {
        SolveOptions warm;
        if (here.persistent)
            warm.warm_start = here.u;
        Vector g(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector plus = h;
            plus(i) += fd_step;
            const double f_plus = value_at(plus, warm).value(obj);
            if (h(i) >= fd_step) {
                Vector minus = h;
                minus(i) -= fd_step;
                g(i) = (f_plus - value_at(minus, warm).value(obj)) / (2.0 * fd_step);
            } else {
                // one-sided at the nonnegativity boundary
                g(i) = (f_plus - here.value(obj)) / fd_step;
            }
        }
        const Vector v = tangent_projection(g, h, budget);
        run.pg_norm = v.norm();
        if (iter == 0)
            run.flat_at_start = g.cwiseAbs().maxCoeff() == 0.0;
        if (run.pg_norm < 1e-8 * budget) {
            if (iter == 0)
                run.stationary_at_start = true;
            break;
        }

        const double reach = budget / std::max(v.cwiseAbs().maxCoeff(), 1e-300);
        double t = last_step > 0.0 ? std::min(2.0 * last_step, reach) : reach;
        const double f0 = here.value(obj);
        bool accepted = false;
        for (int halving = 0; halving <= 40; ++halving, t *= 0.5) {
            Vector trial = project_to_simplex(h + t * g, budget);
            const double predicted = g.dot(trial - h);
            if (!(predicted > 0.0))
                continue;
            PointValue next = value_at(trial, warm);
            if (next.value(obj) >= f0 + 1e-4 * predicted) {
                h = std::move(trial);
                here = std::move(next);
                last_step = t;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
    }
    run.h = h;
    run.value = here.value(obj);
    run.evaluations = evals;
    return run;
}

} // namespace detail

/**
 * Multi-start projected-gradient ascent. Starts are the simplex vertices (up
 * to `starts`), then the centroid, then Dirichlet(1, ..., 1) draws from a
 * generator seeded with p.seed. Returns the best run; ties go to the earliest
 * start.
 */
inline OptimizationResult projected_gradient(const OptimizationProblem& p, int starts = 8) {
    const Eigen::Index n = p.model.size();
    if (n < 2)
        throw ArgumentError("projected gradient needs at least two patches");
    if (starts < 1)
        throw ArgumentError("projected gradient needs at least one start");
    const double H = p.budget;

    std::vector<Vector> initial;
    for (Eigen::Index i = 0; i < n && static_cast<int>(initial.size()) < starts; ++i) {
        Vector v = Vector::Zero(n);
        v(i) = H;
        initial.push_back(v);
    }
    if (static_cast<int>(initial.size()) < starts)
        initial.push_back(Vector::Constant(n, H / static_cast<double>(n)));
    std::mt19937_64 rng(p.seed);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    while (static_cast<int>(initial.size()) < starts) {
        Vector w(n);
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = gamma(rng);
        initial.push_back(project_to_simplex(w * (H / w.sum()), H));
    }

    std::vector<detail::AscentRun> runs(initial.size());
    parallel_for(initial.size(), [&](std::size_t i) {
        runs[i] = detail::ascend(p.model, H, p.objective, initial[i]);
    });

    std::size_t best = 0, evals = 0;
    bool any_progress = false, all_flat = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        evals += runs[i].evaluations;
        if (runs[i].value > runs[best].value)
            best = i;
        if (runs[i].value > runs[i].initial_value || runs[i].stationary_at_start)
            any_progress = true;
        if (!(runs[i].flat_at_start && runs[i].initial_value == runs[0].initial_value))
            all_flat = false;
    }
    if (!any_progress && !all_flat)
        throw NumericalError("projected gradient: no start improved on its initial point (best value " +
                                 std::to_string(runs[best].value) + ", projected gradient norm " +
                                 std::to_string(runs[best].pg_norm) + ")",
                             runs[best].h);

    OptimizationResult res{HarvestAllocation::constrained(runs[best].h, H), runs[best].value};
    res.method = Method::ProjectedGradient;
    res.evaluations = evals;
    res.certificate = runs[best].pg_norm;
    res.certificate_kind = CertificateKind::ProjectedGradientNorm;
    res.flat = all_flat;
    if (n == 2)
        res.theta_star = runs[best].h(0) / H;
    return res;
}

/**
 * Method dispatch. Auto: two patches with a downstream bias use the theta
 * sweep at resolution 1e-3; up to four patches use the k = 100 lattice
 * followed by a projected-gradient polish from the lattice optimum; larger
 * networks use multi-start projected gradient.
 */
inline OptimizationResult optimize(const OptimizationProblem& p) {
    const Eigen::Index n = p.model.size();
    if (!(p.budget > 0.0) || !std::isfinite(p.budget))
        throw ArgumentError("budget must be positive and finite");
    const auto two_patch = TwoPatchScenario::from_model(p.model, p.budget);

    switch (p.method) {
    case Method::ThetaSweep:
        if (!two_patch)
            throw ArgumentError("theta sweep needs two patches with downstream-biased movement");
        return sweep_theta(*two_patch, p.objective, 1e-3);
    case Method::SimplexGrid:
        return simplex_grid_search(p, 100);
    case Method::ProjectedGradient:
        return projected_gradient(p, p.starts);
    case Method::Auto:
        break;
    }

    if (n == 1)
        return simplex_grid_search(p, 1);
    if (two_patch)
        return sweep_theta(*two_patch, p.objective, 1e-3);
    if (n <= 4) {
        OptimizationResult grid = simplex_grid_search(p, 100);
        const auto polish =
            detail::ascend(p.model, p.budget, p.objective, grid.h_star.efforts());
        grid.evaluations += polish.evaluations;
        if (polish.value > grid.value) {
            grid.h_star = HarvestAllocation::constrained(polish.h, p.budget);
            grid.value = polish.value;
            grid.method = Method::ProjectedGradient;
            grid.certificate = polish.pg_norm;
            grid.certificate_kind = CertificateKind::ProjectedGradientNorm;
            if (n == 2)
                grid.theta_star = polish.h(0) / p.budget;
        }
        return grid;
    }
    return projected_gradient(p, p.starts);
}

} // namespace streamharvest
