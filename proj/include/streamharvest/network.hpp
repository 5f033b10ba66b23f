#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace streamharvest {

/// Per-patch effective net flow I_i = sum_j (a_ij / c_j - a_ji / c_i).
struct NetFlowReport {
    Vector flow;
    /// Patch indices by decreasing flow; ties keep the lower index first.
    std::vector<Eigen::Index> ranking;
};

inline NetFlowReport effective_net_flow(const Model& m) {
    const Eigen::Index n = m.size();
    const Matrix& a = m.movement();
    const Vector& c = m.competition();
    NetFlowReport rep{Vector::Zero(n), {}};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j)
                continue;
            // equal competition: subtract the rates first so symmetric
            // exchanges cancel exactly
            rep.flow(i) += c(i) == c(j) ? (a(i, j) - a(j, i)) / c(i) : a(i, j) / c(j) - a(j, i) / c(i);
        }

    const double scale = (a.array().rowwise() / c.transpose().array()).abs().sum();
    if (std::abs(rep.flow.sum()) > 1e-12 * std::max(1.0, scale))
        throw NumericalError("net flows do not sum to zero", rep.flow);

    rep.ranking.resize(static_cast<std::size_t>(n));
    std::iota(rep.ranking.begin(), rep.ranking.end(), Eigen::Index{0});
    std::stable_sort(rep.ranking.begin(), rep.ranking.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return rep.flow(x) > rep.flow(y); });
    return rep;
}

/// Straight stream of n patches: i -> i+1 at d + q, i+1 -> i at d.
inline Matrix straight_stream(Eigen::Index n, double d, double q) {
    if (n < 1)
        throw ArgumentError("a stream needs at least one patch");
    if (!(d > 0.0) || !(q >= 0.0) || !std::isfinite(d) || !std::isfinite(q))
        throw ArgumentError("stream rates need d > 0 and q >= 0");
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        a(i + 1, i) = d + q;
        a(i, i + 1) = d;
    }
    return a;
}

/**
 * Three headwater patches (0, 1, 2) joining at a junction (3) that drains
 * into an outlet (4). Downstream links carry d + q, upstream links d.
 */
inline Matrix three_one_one(double d, double q) {
    if (!(d > 0.0) || !(q >= 0.0) || !std::isfinite(d) || !std::isfinite(q))
        throw ArgumentError("stream rates need d > 0 and q >= 0");
    Matrix a = Matrix::Zero(5, 5);
    for (Eigen::Index i = 0; i < 3; ++i) {
        a(3, i) = d + q;
        a(i, 3) = d;
    }
    a(4, 3) = d + q;
    a(3, 4) = d;
    return a;
}

/// Candidate group takes (1 - theta) H split by beta; the rest takes theta H
/// split by alpha, so theta is the share moved out of the group.
struct TwoGroupSplit {
    double theta;
    Vector alpha; ///< weights outside the group, in increasing patch order
    Vector beta;  ///< weights inside the group, in group order
};

/// Lead patch takes (1 - delta) H; the other group members share delta H by gamma.
struct WithinGroupSplit {
    Eigen::Index lead;
    double delta;
    Vector gamma; ///< weights of the other members, in group order without the lead
};

struct GroupedAllocation {
    std::vector<Eigen::Index> group;
    std::variant<TwoGroupSplit, WithinGroupSplit> split;

    std::vector<Eigen::Index> complement(Eigen::Index n) const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::find(group.begin(), group.end(), i) == group.end())
                out.push_back(i);
        return out;
    }

    std::vector<Eigen::Index> others_than_lead() const {
        const auto& w = std::get<WithinGroupSplit>(split);
        std::vector<Eigen::Index> out;
        for (Eigen::Index i : group)
            if (i != w.lead)
                out.push_back(i);
        return out;
    }

    /// Checks indices and weights against an n-patch network.
    void validate(Eigen::Index n) const {
        if (group.empty())
            throw ArgumentError("candidate group is empty");
        for (std::size_t k = 0; k < group.size(); ++k) {
            if (group[k] < 0 || group[k] >= n)
                throw ArgumentError("group index out of range");
            if (std::find(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(k), group[k]) !=
                group.begin() + static_cast<std::ptrdiff_t>(k))
                throw ArgumentError("duplicate group index");
        }
        auto weights = [](const Vector& v, std::size_t expected, const char* name) {
            if (static_cast<std::size_t>(v.size()) != expected)
                throw ArgumentError(std::string(name) + " has the wrong length for the grouping");
            if (expected == 0)
                return;
            if ((v.array() < 0.0).any() || std::abs(v.sum() - 1.0) > 1e-12)
                throw ArgumentError(std::string(name) + " must be nonnegative and sum to 1");
        };
        auto unit = [](double x, const char* name) {
            if (!(x >= 0.0 && x <= 1.0))
                throw ArgumentError(std::string(name) + " must lie in [0, 1]");
        };
        if (const auto* t = std::get_if<TwoGroupSplit>(&split)) {
            unit(t->theta, "theta");
            const std::size_t outside = static_cast<std::size_t>(n) - group.size();
            if (outside == 0)
                throw ArgumentError("two-group split needs patches outside the group");
            weights(t->alpha, outside, "alpha");
            weights(t->beta, group.size(), "beta");
        } else {
            const auto& w = std::get<WithinGroupSplit>(split);
            unit(w.delta, "delta");
            if (std::find(group.begin(), group.end(), w.lead) == group.end())
                throw ArgumentError("lead patch is not in the group");
            weights(w.gamma, group.size() - 1, "gamma");
        }
    }

    /// Effort vector for budget H.
    Vector expand(Eigen::Index n, double budget) const {
        validate(n);
        Vector h = Vector::Zero(n);
        if (const auto* t = std::get_if<TwoGroupSplit>(&split)) {
            const auto out = complement(n);
            for (std::size_t k = 0; k < group.size(); ++k)
                h(group[k]) = (1.0 - t->theta) * t->beta(static_cast<Eigen::Index>(k)) * budget;
            for (std::size_t k = 0; k < out.size(); ++k)
                h(out[k]) = t->theta * t->alpha(static_cast<Eigen::Index>(k)) * budget;
        } else {
            const auto& w = std::get<WithinGroupSplit>(split);
            const auto others = others_than_lead();
            h(w.lead) = (1.0 - w.delta) * budget;
            for (std::size_t k = 0; k < others.size(); ++k)
                h(others[k]) = w.delta * w.gamma(static_cast<Eigen::Index>(k)) * budget;
        }
        return h;
    }
};

enum class Certainty { Certified, GapConditionFailed, LowerBoundOnly };

inline const char* to_string(Certainty c) {
    switch (c) {
    case Certainty::Certified: return "certified";
    case Certainty::GapConditionFailed: return "gap_condition_failed";
    case Certainty::LowerBoundOnly: return "lower_bound_only";
    }
    return "unknown";
}

/// Large-growth recommendation for where to concentrate effort.
struct AsymptoticAdvice {
    Objective objective;
    std::vector<Eigen::Index> candidate_group;
    Eigen::Index lead_patch;
    /// All group members sharing the largest net flow (ties within 1e-12).
    std::vector<Eigen::Index> co_leaders;
    Certainty certainty;
    std::string notes;
};

namespace detail {

inline bool tied(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300});
}

inline std::vector<Eigen::Index> extreme_competition_group(const Model& m, bool largest) {
    const Vector& c = m.competition();
    const double target = largest ? c.maxCoeff() : c.minCoeff();
    std::vector<Eigen::Index> g;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (tied(c(i), target))
            g.push_back(i);
    return g;
}

inline AsymptoticAdvice advise(const Model& m, Objective obj, std::vector<Eigen::Index> group) {
    const Vector I = effective_net_flow(m).flow;
    Eigen::Index lead = group.front();
    for (Eigen::Index i : group)
        if (I(i) > I(lead))
            lead = i;
    AsymptoticAdvice adv{obj, std::move(group), lead, {}, Certainty::Certified, {}};
    for (Eigen::Index i : adv.candidate_group)
        if (tied(I(i), I(lead)))
            adv.co_leaders.push_back(i);
    if (adv.co_leaders.size() > 1)
        adv.certainty = Certainty::LowerBoundOnly;
    return adv;
}

inline double second_flow(const Vector& I, const std::vector<Eigen::Index>& group, Eigen::Index lead) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i : group)
        if (i != lead)
            best = std::max(best, I(i));
    return best;
}

inline std::string patch_list(const std::vector<Eigen::Index>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k)
        s += (k ? "," : "") + std::to_string(v[k] + 1);
    return s;
}

} // namespace detail

/**
 * Biomass at large growth: concentrate on the most competitive patches, and
 * within them on the patch with the largest effective net flow. Growth rates
 * in the model are not used.
 */
inline AsymptoticAdvice asymptotic_biomass_strategy(const Model& m, double budget) {
    if (!(budget > 0.0))
        throw ArgumentError("budget must be positive");
    AsymptoticAdvice adv =
        detail::advise(m, Objective::Biomass, detail::extreme_competition_group(m, true));
    if (adv.certainty == Certainty::Certified)
        adv.notes = "all effort on patch " + std::to_string(adv.lead_patch + 1) +
                    " (highest competition, largest net flow in group)";
    else
        adv.notes = "net flow tie among patches " + detail::patch_list(adv.co_leaders) +
                    "; effort belongs on these co-leaders";
    return adv;
}

/**
 * Yield at large growth: concentrate on the least competitive patches. All
 * effort goes to the net-flow leader when its lead over the rest of the group
 * exceeds 2H/c; otherwise only a share above H/n is certified.
 */
inline AsymptoticAdvice asymptotic_yield_strategy(const Model& m, double budget) {
    if (!(budget > 0.0))
        throw ArgumentError("budget must be positive");
    AsymptoticAdvice adv =
        detail::advise(m, Objective::Yield, detail::extreme_competition_group(m, false));
    const std::string lead = std::to_string(adv.lead_patch + 1);
    if (adv.certainty == Certainty::LowerBoundOnly) {
        adv.notes = "net flow tie among patches " + detail::patch_list(adv.co_leaders) +
                    "; no single lead patch";
        return adv;
    }
    if (adv.candidate_group.size() == 1) {
        adv.notes = "all effort on patch " + lead + " (lowest competition)";
        return adv;
    }
    const Vector I = effective_net_flow(m).flow;
    const double c = m.competition()(adv.lead_patch);
    const double gap = I(adv.lead_patch) - detail::second_flow(I, adv.candidate_group, adv.lead_patch);
    const auto group_size = static_cast<double>(adv.candidate_group.size());
    if (gap > 2.0 * budget / c) {
        adv.notes = "all effort on patch " + lead + " (net flow lead exceeds 2H/c)";
    } else {
        adv.certainty = Certainty::GapConditionFailed;
        adv.notes = "effort on patch " + lead + " > H/" +
                    std::to_string(static_cast<long long>(group_size)) +
                    "; net flow lead does not exceed 2H/c";
    }
    return adv;
}

/**
 * Large-growth limits of the objective derivatives along a grouped
 * allocation with budget H. Two-group splits differentiate in theta and give
 * lim M'/H (biomass) or lim Y'/(rH) (yield). Within-group splits
 * differentiate in delta and give lim r M' (biomass) or lim Y'/H (yield).
 * Group members must share one competition rate c.
 */
inline double asymptotic_limit(const Model& m, const GroupedAllocation& alloc, Objective obj,
                               double budget) {
    const Eigen::Index n = m.size();
    alloc.validate(n);
    const Vector& cv = m.competition();
    const double c = cv(alloc.group.front());
    for (Eigen::Index i : alloc.group)
        if (!detail::tied(cv(i), c))
            throw ArgumentError("group members must share one competition rate");

    if (const auto* t = std::get_if<TwoGroupSplit>(&alloc.split)) {
        const auto out = alloc.complement(n);
        double weighted = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k)
            weighted += t->alpha(static_cast<Eigen::Index>(k)) / cv(out[k]);
        return obj == Objective::Biomass ? 1.0 / c - weighted : -1.0 / c + weighted;
    }
    const auto& w = std::get<WithinGroupSplit>(alloc.split);
    const Vector I = effective_net_flow(m).flow;
    const auto others = alloc.others_than_lead();
    double pulled = 0.0, squares = 0.0;
    for (std::size_t k = 0; k < others.size(); ++k) {
        const double g = w.gamma(static_cast<Eigen::Index>(k));
        pulled += g * I(others[k]);
        squares += g * g;
    }
    if (obj == Objective::Biomass)
        return budget * (-I(w.lead) + pulled);
    return 2.0 * budget / c * (1.0 - w.delta - w.delta * squares) - I(w.lead) + pulled;
}

} // namespace streamharvest
