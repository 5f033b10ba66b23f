#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace streamharvest;
using namespace testing_support;

namespace {

Model stream_model(Eigen::Index n, double d, double q, const Vector& c, double r = 1.0) {
    return Model(Vector::Constant(n, r), c, straight_stream(n, d, q));
}

} // namespace

TEST(Generators, StraightStreamEntries) {
    const Matrix a = straight_stream(2, 1, 7);
    Matrix want(2, 2);
    want << 0, 1, 8, 0;
    EXPECT_EQ(a, want);
    const Matrix b = straight_stream(5, 0.5, 2);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) {
            const double expected = j + 1 == i ? 2.5 : (i + 1 == j ? 0.5 : 0.0);
            EXPECT_EQ(b(i, j), expected);
        }
}

TEST(Generators, ThreeOneOneEdges) {
    const Matrix a = three_one_one(1, 2);
    int edges = 0;
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            edges += a(i, j) > 0;
    EXPECT_EQ(edges, 8);
    for (Eigen::Index head = 0; head < 3; ++head) {
        EXPECT_EQ(a(3, head), 3.0);
        EXPECT_EQ(a(head, 3), 1.0);
    }
    EXPECT_EQ(a(4, 3), 3.0);
    EXPECT_EQ(a(3, 4), 1.0);
}

TEST(NetFlow, StraightStreamExact) {
    for (Eigen::Index n : {2, 3, 4, 7}) {
        const double q = 2.5, c = 0.5;
        const auto rep = effective_net_flow(stream_model(n, 1.3, q, Vector::Constant(n, c)));
        EXPECT_EQ(rep.flow(0), -q / c);
        EXPECT_EQ(rep.flow(n - 1), q / c);
        for (Eigen::Index i = 1; i + 1 < n; ++i)
            EXPECT_EQ(rep.flow(i), 0.0);
        EXPECT_EQ(rep.ranking.front(), n - 1);
    }
    const auto three = effective_net_flow(stream_model(3, 1, 2, Vector::Ones(3)));
    EXPECT_EQ(three.flow, vec({-2, 0, 2}));
}

TEST(NetFlow, ThreeOneOne) {
    const Model m(Vector::Ones(5), Vector::Ones(5), three_one_one(1, 2));
    const auto rep = effective_net_flow(m);
    EXPECT_EQ(rep.flow, vec({-2, -2, -2, 4, 2}));
    EXPECT_EQ(rep.ranking, (std::vector<Eigen::Index>{3, 4, 0, 1, 2}));
}

TEST(NetFlow, TwoPatchUnequalCompetition) {
    const Model m(vec({1, 1}), vec({1, 2}), two_patch_movement(2, 1));
    EXPECT_EQ(effective_net_flow(m).flow, vec({-1.5, 1.5}));
}

TEST(NetFlow, SumsToZero) {
    std::mt19937_64 rng(53);
    for (int k = 0; k < 100; ++k) {
        const Model m = random_model(rng, 1 + k % 8, 0, 1);
        const auto rep = effective_net_flow(m);
        const double scale = std::max(1.0, rep.flow.cwiseAbs().sum());
        EXPECT_LE(std::abs(rep.flow.sum()), 1e-12 * scale);
    }
}

TEST(BiomassStrategy, Examples) {
    const auto straight = asymptotic_biomass_strategy(stream_model(4, 1, 2, Vector::Ones(4)), 4);
    EXPECT_EQ(straight.lead_patch, 3);
    EXPECT_EQ(straight.certainty, Certainty::Certified);

    const Model net(Vector::Ones(5), Vector::Ones(5), three_one_one(1, 2));
    EXPECT_EQ(asymptotic_biomass_strategy(net, 4).lead_patch, 3);

    const auto mixed = asymptotic_biomass_strategy(stream_model(3, 1, 2, vec({2, 2, 1})), 4);
    EXPECT_EQ(mixed.candidate_group, (std::vector<Eigen::Index>{0, 1}));
    const Vector I = effective_net_flow(stream_model(3, 1, 2, vec({2, 2, 1}))).flow;
    EXPECT_EQ(mixed.lead_patch, I(1) > I(0) ? 1 : 0);
}

TEST(BiomassStrategy, CoLeadersOnTies) {
    // symmetric two-way exchange: equal net flows
    const Model m(vec({1, 1}), vec({1, 1}), two_patch_movement(1, 1));
    const auto adv = asymptotic_biomass_strategy(m, 1);
    EXPECT_EQ(adv.certainty, Certainty::LowerBoundOnly);
    EXPECT_EQ(adv.co_leaders.size(), 2u);
}

TEST(YieldStrategy, GapCondition) {
    // straight stream: gap is q/c, certified iff q > 2H
    const auto strong = asymptotic_yield_strategy(stream_model(3, 1, 9, Vector::Ones(3)), 4);
    EXPECT_EQ(strong.certainty, Certainty::Certified);
    EXPECT_EQ(strong.lead_patch, 2);
    const auto weak = asymptotic_yield_strategy(stream_model(3, 1, 7, Vector::Ones(3)), 4);
    EXPECT_EQ(weak.certainty, Certainty::GapConditionFailed);
    EXPECT_EQ(weak.lead_patch, 2);
    EXPECT_NE(weak.notes.find("H/3"), std::string::npos);

    const auto group = asymptotic_yield_strategy(stream_model(3, 1, 2, vec({1, 1, 2})), 4);
    EXPECT_EQ(group.candidate_group, (std::vector<Eigen::Index>{0, 1}));
}

TEST(AsymptoticLimits, FormulaSubstitution) {
    const Model m = stream_model(3, 1, 2, vec({2, 2, 1}));
    GroupedAllocation two{{0, 1}, TwoGroupSplit{0.3, vec({1}), vec({0.5, 0.5})}};
    EXPECT_DOUBLE_EQ(asymptotic_limit(m, two, Objective::Biomass, 4), -0.5);
    EXPECT_DOUBLE_EQ(asymptotic_limit(m, two, Objective::Yield, 4), 0.5);

    // within-group: I_lead = 4, other I = 2, gamma = 1 gives -2H
    const Model net(Vector::Ones(5), Vector::Ones(5), three_one_one(1, 2));
    GroupedAllocation within{{3, 4}, WithinGroupSplit{3, 0.2, vec({1})}};
    EXPECT_DOUBLE_EQ(asymptotic_limit(net, within, Objective::Biomass, 4), -8.0);

    // delta = 0: 2H/c - I_lead + sum gamma I
    GroupedAllocation lead_only{{3, 4}, WithinGroupSplit{3, 0.0, vec({1})}};
    EXPECT_DOUBLE_EQ(asymptotic_limit(net, lead_only, Objective::Yield, 4), 8.0 - 4 + 2);
    EXPECT_DOUBLE_EQ(asymptotic_limit(net, lead_only, Objective::Yield, 0.5), 1.0 - 4 + 2);
}

TEST(AsymptoticLimits, InconsistentGroupings) {
    const Model m = stream_model(3, 1, 2, vec({2, 2, 1}));
    EXPECT_THROW(asymptotic_limit(m, {{0, 1}, TwoGroupSplit{0.3, vec({0.5, 0.5}), vec({0.5, 0.5})}},
                                  Objective::Biomass, 4),
                 ArgumentError);
    EXPECT_THROW(asymptotic_limit(m, {{0, 2}, TwoGroupSplit{0.3, vec({1}), vec({0.5, 0.5})}},
                                  Objective::Biomass, 4),
                 ArgumentError); // c differs inside the group
    EXPECT_THROW(asymptotic_limit(m, {{0, 1}, WithinGroupSplit{2, 0.1, vec({1})}}, Objective::Yield, 4),
                 ArgumentError); // lead outside the group
    EXPECT_THROW(asymptotic_limit(m, {{0, 1}, TwoGroupSplit{1.3, vec({1}), vec({0.5, 0.5})}},
                                  Objective::Yield, 4),
                 ArgumentError);
}

TEST(GroupedAllocationTest, ExpandsToBudget) {
    GroupedAllocation two{{0, 1}, TwoGroupSplit{0.25, vec({1}), vec({0.5, 0.5})}};
    const Vector h = two.expand(3, 4);
    EXPECT_EQ(h, vec({1.5, 1.5, 1.0}));
    GroupedAllocation within{{3, 4}, WithinGroupSplit{3, 0.25, vec({1})}};
    EXPECT_EQ(within.expand(5, 4), vec({0, 0, 0, 3, 1}));
}

namespace {

// Finite-difference derivative of an objective along a grouped allocation,
// in the allocation's own parameter (theta or delta).
double fd_along(const Model& m, double H, Objective obj, GroupedAllocation g, double step) {
    auto eval = [&](double p) {
        if (auto* t = std::get_if<TwoGroupSplit>(&g.split))
            t->theta = p;
        else
            std::get<WithinGroupSplit>(g.split).delta = p;
        const Vector h = g.expand(m.size(), H);
        return objective_value(solve_equilibrium(m, h), h, obj);
    };
    const double p0 = std::holds_alternative<TwoGroupSplit>(g.split)
                          ? std::get<TwoGroupSplit>(g.split).theta
                          : std::get<WithinGroupSplit>(g.split).delta;
    return (eval(p0 + step) - eval(p0 - step)) / (2 * step);
}

} // namespace

TEST(LargeGrowth, EquilibriumApproachesCarryingCapacity) {
    const double r = 1e4;
    const Model m(Vector::Constant(3, r), vec({2, 2, 1}), straight_stream(3, 1, 2));
    const Vector h = vec({1, 1, 2});
    const auto eq = solve_equilibrium(m, h);
    for (Eigen::Index i = 0; i < 3; ++i)
        EXPECT_LT(std::abs(eq.u(i) * m.competition()(i) / r - 1), 1e-2);

    // du_i/dtheta: -alpha_i H / c_i off the group, +beta_i H / c_i inside
    GroupedAllocation g{{0, 1}, TwoGroupSplit{0.5, vec({1}), vec({0.4, 0.6})}};
    auto u_at = [&](double theta) {
        std::get<TwoGroupSplit>(g.split).theta = theta;
        return solve_equilibrium(m, g.expand(3, 4)).u;
    };
    const double step = 1e-3;
    const Vector du = (u_at(0.5 + step) - u_at(0.5 - step)) / (2 * step);
    EXPECT_NEAR(du(2), -1 * 4 / 1.0, 0.05 * 4);
    EXPECT_NEAR(du(0), 0.4 * 4 / 2.0, 0.05 * 0.8);
    EXPECT_NEAR(du(1), 0.6 * 4 / 2.0, 0.05 * 1.2);
}

TEST(LargeGrowth, FiniteDifferencesApproachLimits) {
    const double H = 4, r = 1e4;
    const Model m(Vector::Constant(3, r), vec({2, 2, 1}), straight_stream(3, 1, 2));
    GroupedAllocation two{{0, 1}, TwoGroupSplit{0.5, vec({1}), vec({0.4, 0.6})}};
    const double bio = fd_along(m, H, Objective::Biomass, two, 1e-3) / H;
    EXPECT_NEAR(bio, asymptotic_limit(m, two, Objective::Biomass, H), 0.01 * 0.5);
    const double yld = fd_along(m, H, Objective::Yield, two, 1e-3) / (r * H);
    EXPECT_NEAR(yld, asymptotic_limit(m, two, Objective::Yield, H), 0.01 * 0.5);
}

TEST(LargeGrowth, GridOptimizerConcentratesInGroup) {
    const double r = 1e4, H = 4;
    const Model m(Vector::Constant(3, r), vec({2, 2, 1}), straight_stream(3, 1, 2));
    const auto bio = simplex_grid_search({m, H, Objective::Biomass}, 40);
    const auto bio_adv = asymptotic_biomass_strategy(m, H);
    double inside = 0;
    for (Eigen::Index i : bio_adv.candidate_group)
        inside += bio.h_star.efforts()(i);
    EXPECT_GE(inside, 0.99 * H);

    const auto yld = simplex_grid_search({m, H, Objective::Yield}, 40);
    const auto yld_adv = asymptotic_yield_strategy(m, H);
    inside = 0;
    for (Eigen::Index i : yld_adv.candidate_group)
        inside += yld.h_star.efforts()(i);
    EXPECT_GE(inside, 0.99 * H);
}
