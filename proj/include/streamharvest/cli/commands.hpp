#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "../csv.hpp"
#include "../equilibrium.hpp"
#include "../network.hpp"
#include "../optimizer.hpp"
#include "../parallel.hpp"
#include "../regimes.hpp"
#include "../two_patch.hpp"
#include "scenario.hpp"

namespace streamharvest::cli {

enum ExitCode { kOk = 0, kParseError = 2, kNumericalError = 3, kIoError = 4 };

/// Regime-map cell codes.
enum VerdictCode {
    kExtinctionRisk = 0,
    kUpstreamOnly = 1,
    kDownstreamOnly = 2,
    kBoundaryOrInterior = 3,
};

namespace detail {

inline std::string num(double x) { return format_number(x); }

inline TwoPatchScenario require_two_patch(const ScenarioFile& sf) {
    auto s = TwoPatchScenario::from_model(sf.model, sf.budget);
    if (!s)
        throw ArgumentError("this command needs a two-patch model with downstream-biased movement "
                            "(rate 1 -> 2 greater than rate 2 -> 1 > 0)");
    return *s;
}

} // namespace detail

/**
 * Equilibrium at one allocation. Effort comes from `theta` when given,
 * otherwise from the scenario's harvest or theta entries.
 */
inline Table cmd_equilibrium(const ScenarioFile& sf, std::optional<double> theta) {
    Vector h;
    if (!theta)
        theta = sf.theta;
    if (theta)
        h = detail::require_two_patch(sf).efforts(*theta);
    else if (sf.harvest)
        h = *sf.harvest;
    else
        throw ArgumentError("equilibrium needs --theta or a harvest/theta entry in the scenario");
    const auto alloc = HarvestAllocation::constrained(h, sf.budget);
    const EquilibriumResult eq = solve_equilibrium(sf.model, alloc);

    Table t;
    t.comments = {"s_origin=" + detail::num(eq.s_origin),
                  "s_equilibrium=" + detail::num(eq.s_equilibrium),
                  "persistent=" + std::string(eq.persistent ? "true" : "false"),
                  "residual=" + detail::num(eq.residual)};
    t.header = {"patch", "h", "u", "yield"};
    for (Eigen::Index i = 0; i < h.size(); ++i)
        t.add_row({std::to_string(i + 1), detail::num(h(i)), detail::num(eq.u(i)),
                   detail::num(h(i) * eq.u(i))});
    t.add_row({"total", detail::num(sf.budget), detail::num(total_biomass(eq)),
               detail::num(total_yield(eq, alloc))});
    return t;
}

/// Objective landscape over theta for a two-patch scenario.
inline Table cmd_sweep(const ScenarioFile& sf, double resolution) {
    const TwoPatchScenario s = detail::require_two_patch(sf);
    const OptimizationResult res = sweep_theta(s, sf.objective, resolution);
    Table t;
    t.comments = {std::string("objective=") + to_string(sf.objective),
                  "theta_star=" + detail::num(*res.theta_star), "value=" + detail::num(res.value),
                  "interior_local_minimum=" +
                      std::string(res.interior_local_minimum ? "true" : "false")};
    t.header = {"theta", "biomass", "yield", "persistent"};
    for (const auto& p : res.landscape)
        t.add_row({detail::num(p.theta), detail::num(p.biomass), detail::num(p.yield),
                   p.persistent ? "1" : "0"});
    return t;
}

inline Table cmd_optimize(const ScenarioFile& sf) {
    const OptimizationResult res = optimize(sf.problem());
    Table t;
    if (res.flat)
        t.comments.push_back("flat landscape: objective identical at every evaluated point");
    t.header = {"objective", "method", "value", "certificate", "certificate_kind", "evaluations"};
    const Vector& h = res.h_star.efforts();
    for (Eigen::Index i = 0; i < h.size(); ++i)
        t.header.push_back("h_" + std::to_string(i + 1));
    std::vector<std::string> row = {
        to_string(sf.objective),
        to_string(res.method),
        detail::num(res.value),
        detail::num(res.certificate),
        res.certificate_kind == CertificateKind::GridResolution ? "grid_resolution"
                                                                : "projected_gradient_norm",
        std::to_string(res.evaluations)};
    for (Eigen::Index i = 0; i < h.size(); ++i)
        row.push_back(detail::num(h(i)));
    t.add_row(std::move(row));
    return t;
}

/// Growth rates below this are too small for the large-growth advice to be
/// meaningful.
inline double advice_growth_scale(const ScenarioFile& sf) {
    const Model& m = sf.model;
    return 100.0 * m.competition().maxCoeff() *
           std::max({1.0, sf.budget, m.size() > 1 ? m.movement().maxCoeff() : 0.0});
}

/// Net flow per patch with the large-growth advice as comments. Writes a
/// warning to `warn` when the scenario's growth rates are small.
inline Table cmd_netflow(const ScenarioFile& sf, std::ostream& warn) {
    const NetFlowReport rep = effective_net_flow(sf.model);
    const AsymptoticAdvice bio = asymptotic_biomass_strategy(sf.model, sf.budget);
    const AsymptoticAdvice yld = asymptotic_yield_strategy(sf.model, sf.budget);
    if (sf.model.growth().minCoeff() < advice_growth_scale(sf))
        warn << "warning: growth rates are small; the advice below holds as r grows large\n";

    Table t;
    t.comments = {std::string("biomass: ") + to_string(bio.certainty) + ": " + bio.notes,
                  std::string("yield: ") + to_string(yld.certainty) + ": " + yld.notes};
    t.header = {"patch", "I", "rank"};
    std::vector<std::size_t> rank(rep.ranking.size());
    for (std::size_t k = 0; k < rep.ranking.size(); ++k)
        rank[static_cast<std::size_t>(rep.ranking[k])] = k + 1;
    for (Eigen::Index i = 0; i < rep.flow.size(); ++i)
        t.add_row({std::to_string(i + 1), detail::num(rep.flow(i)),
                   std::to_string(rank[static_cast<std::size_t>(i)])});
    return t;
}

struct RegimeCell {
    int verdict;
    double theta_star; ///< NaN when no optimum is reported
};

/**
 * Verdict for one homogeneous two-patch cell. Cells where persistence is not
 * guaranteed for every split are reported as extinction risk; `exact`
 * replaces the sufficient condition by the spectral bound on a theta grid.
 */
inline RegimeCell regime_cell(const TwoPatchScenario& s, Objective obj, bool exact,
                              double resolution) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool persists = exact ? persistent_on_grid(s, 101) : persistence_guaranteed(s);
    if (!persists)
        return {kExtinctionRisk, nan};
    const RegimeVerdict v = obj == Objective::Biomass ? classify_biomass(s) : classify_yield(s, resolution);
    const double theta = v.theta_star.value_or(nan);
    switch (v.regime) {
    case Regime::UpstreamOnly: return {kUpstreamOnly, theta};
    case Regime::DownstreamOnly: return {kDownstreamOnly, theta};
    default: return {kBoundaryOrInterior, theta};
    }
}

inline double grid_point(std::pair<double, double> range, int steps, int k) {
    if (steps == 1)
        return range.first;
    return range.first + (range.second - range.first) * k / (steps - 1);
}

/// Regime map over (q/H, r) using the scenario's d, c and H. Rows are q/H
/// values, columns r values.
inline Table cmd_regime_map(const ScenarioFile& sf, bool exact, double resolution) {
    if (!sf.regime_map)
        throw ArgumentError("scenario has no regime_map section");
    const TwoPatchScenario base = detail::require_two_patch(sf);
    if (!base.equal_competition())
        throw UnsupportedCaseError("regime maps need equal competition rates");
    const RegimeMapGrid& g = *sf.regime_map;
    const double H = sf.budget, d = base.d(), c = base.c1();

    const auto cells = static_cast<std::size_t>(g.q_steps) * static_cast<std::size_t>(g.r_steps);
    std::vector<RegimeCell> out(cells);
    parallel_for(cells, [&](std::size_t idx) {
        const int iq = static_cast<int>(idx / static_cast<std::size_t>(g.r_steps));
        const int ir = static_cast<int>(idx % static_cast<std::size_t>(g.r_steps));
        const double q = grid_point(g.q_over_h, g.q_steps, iq) * H;
        const double r = grid_point(g.r, g.r_steps, ir);
        out[idx] = regime_cell(TwoPatchScenario::homogeneous(r, c, d, q, H), sf.objective, exact,
                               resolution);
    });

    Table t;
    t.comments = {std::string("objective=") + to_string(sf.objective), "d=" + detail::num(d),
                  "c=" + detail::num(c), "H=" + detail::num(H),
                  "verdict: 0 extinction risk, 1 upstream only, 2 downstream only, "
                  "3 boundary either or interior"};
    t.header = {"q_over_H", "r", "verdict", "theta_star"};
    for (std::size_t idx = 0; idx < cells; ++idx) {
        const int iq = static_cast<int>(idx / static_cast<std::size_t>(g.r_steps));
        const int ir = static_cast<int>(idx % static_cast<std::size_t>(g.r_steps));
        t.add_row({detail::num(grid_point(g.q_over_h, g.q_steps, iq)),
                   detail::num(grid_point(g.r, g.r_steps, ir)), std::to_string(out[idx].verdict),
                   std::isnan(out[idx].theta_star) ? "" : detail::num(out[idx].theta_star)});
    }
    return t;
}

} // namespace streamharvest::cli
