// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances and runtime limits are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "streamharvest/streamharvest.hpp"

using namespace streamharvest;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (ok)
                detail << what;
            ok = false;
        }
    }
};

using Check = std::function<void(Outcome&)>;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v(i++) = x;
    return v;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

double biomass_at(const TwoPatchScenario& s, double theta) {
    return total_biomass(solve_equilibrium(s, theta));
}

double yield_at(const TwoPatchScenario& s, double theta) {
    return total_yield(solve_equilibrium(s, theta), s.efforts(theta));
}

double objective_at(const Model& m, const Vector& h, Objective o) {
    return objective_value(solve_equilibrium(m, h), h, o);
}

// Random irreducible model (ring plus random extra edges).
Model random_model(std::mt19937_64& rng, Eigen::Index n, double r_lo, double r_hi) {
    Vector r(n), c(n);
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r(i) = uniform(rng, r_lo, r_hi);
        c(i) = uniform(rng, 0.5, 2.0);
    }
    if (n > 1) {
        for (Eigen::Index i = 0; i < n; ++i)
            a((i + 1) % n, i) = uniform(rng, 0.1, 2.0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (i != j && a(i, j) == 0.0 && uniform(rng, 0, 1) < 0.4)
                    a(i, j) = uniform(rng, 0.1, 2.0);
    }
    return Model(r, c, a);
}

// ---------------------------------------------------------------------------

void yield_optima(Outcome& out) {
    struct Case {
        double r, lo, hi;
    };
    for (const Case& c : {Case{1, 1, 1}, Case{3, 0.63, 0.69}, Case{11, 0.03, 0.09}, Case{15, 0.05, 0.11}}) {
        const auto s = TwoPatchScenario::homogeneous(c.r, 1, 1, 3, 4);
        const double theta = *sweep_theta(s, Objective::Yield, 1e-3).theta_star;
        out.detail << "r=" << c.r << ": theta*=" << fmt(theta) << "; ";
        out.require(theta >= c.lo && theta <= c.hi,
                    "r=" + fmt(c.r) + " theta* outside [" + fmt(c.lo) + ", " + fmt(c.hi) + "]; ");
    }
}

void biomass_regimes(Outcome& out) {
    auto best = [](double r) {
        return *sweep_theta(TwoPatchScenario::homogeneous(r, 1, 1, 7, 4), Objective::Biomass, 1e-3)
                    .theta_star;
    };
    out.require(best(5) == 1.0, "r=5 maximizer is not theta=1; ");
    out.require(best(13) == 0.0, "r=13 maximizer is not theta=0; ");
    out.require(best(17) == 0.0, "r=17 maximizer is not theta=0; ");
    const auto s = TwoPatchScenario::homogeneous(11, 1, 1, 7, 4);
    const double m0 = biomass_at(s, 0), m1 = biomass_at(s, 1);
    out.detail << "M(0)=" << fmt(m0) << " M(1)=" << fmt(m1) << "; ";
    out.require(std::abs(m0 - m1) < 1e-8 * m0, "tie not within 1e-8; ");
    out.require(std::abs(m0 - 15.0) < 1e-8 * 15.0, "M(0) != 15; ");
}

void threshold_formulas(Outcome& out) {
    const double d = 1, q = 7, H = 4;
    const ThresholdSet t = thresholds(TwoPatchScenario::homogeneous(1, 1, d, q, H));
    // rationalized denominators: 1/(sqrt(d+q) - sqrt(d)) = (sqrt(d+q) + sqrt(d))/q
    const double root = std::sqrt(d * (d + q));
    const double r_M = 2 * d + q + H * (d + q + root) / q;
    const double r_m = 2 * d + q - H * (root + d) / q;
    out.require(std::abs(t.r_crit - 32.0 / 9.0) <= 1e-10, "r_crit; ");
    out.require(std::abs(t.r_m - r_m) <= 1e-10, "r_m; ");
    out.require(std::abs(t.r_M - r_M) <= 1e-10, "r_M; ");
    out.require(std::abs(t.r_tie - 11.0) <= 1e-10, "r_tie; ");
    out.require(std::abs(t.r_m - 6.8123) < 5e-5 && std::abs(t.r_M - 15.1877) < 5e-5,
                "4-digit values; ");
    out.detail << "r_crit=" << fmt(t.r_crit) << " r_m=" << fmt(t.r_m) << " r_M=" << fmt(t.r_M)
               << " r_tie=" << fmt(t.r_tie);
}

void tie_law(Outcome& out) {
    std::mt19937_64 rng(2024);
    int draws = 0;
    double worst = 0;
    while (draws < 200) {
        const double d = uniform(rng, 0.1, 5), q = uniform(rng, 0.1, 10), H = uniform(rng, 0.1, 10),
                     c = uniform(rng, 0.1, 5);
        const auto probe = TwoPatchScenario::homogeneous(1, c, d, q, H);
        const double r_tie = thresholds(probe).r_tie;
        // both perturbed rates must keep the population alive at every split
        if (!persistence_guaranteed(probe.with_growth(0.9 * r_tie)))
            continue;
        ++draws;
        const auto s = probe.with_growth(r_tie);
        const double m0 = biomass_at(s, 0), m1 = biomass_at(s, 1);
        worst = std::max(worst, std::abs(m0 - m1) / m0);
        out.require(std::abs(m0 - m1) <= 1e-8 * m0, "tie violated at draw " + std::to_string(draws) + "; ");
        for (double f : {0.9, 1.1}) {
            const auto p = probe.with_growth(f * r_tie);
            const double diff = biomass_at(p, 0) - biomass_at(p, 1);
            out.require((diff > 0) == (f > 1), "sign law violated at draw " + std::to_string(draws) + "; ");
        }
    }
    out.detail << "200 draws, worst relative gap " << fmt(worst);
}

void msy_identity(Outcome& out) {
    std::mt19937_64 rng(77);
    double worst_u = 0, worst_y = 0;
    for (int k = 0; k < 100; ++k) {
        const Model m = random_model(rng, 1 + k % 5, 0.5, 5);
        const MsySolution s = msy_unconstrained(m);
        const auto eq = solve_equilibrium(m, s.h.efforts());
        const Vector target = m.growth().cwiseQuotient(2 * m.competition());
        const double du = (eq.u - target).cwiseAbs().maxCoeff();
        const double want = (m.growth().array().square() / (4 * m.competition().array())).sum();
        const double dy = std::abs(total_yield(eq, s.h.efforts()) - want) / want;
        worst_u = std::max(worst_u, du);
        worst_y = std::max(worst_y, dy);
        out.require(eq.persistent && du <= 1e-8, "equilibrium off target in model " + std::to_string(k) + "; ");
        out.require(dy <= 1e-10, "yield off in model " + std::to_string(k) + "; ");
    }
    out.detail << "max |u - r/2c| " << fmt(worst_u) << ", max yield rel err " << fmt(worst_y);
}

void derivative_oracles(Outcome& out) {
    std::mt19937_64 rng(99);
    const double step = 1e-4;
    double worst_m = 0, worst_y = 0;
    for (int k = 0; k < 100; ++k) {
        const double d = uniform(rng, 0.2, 4), q = uniform(rng, 0.2, 10), H = uniform(rng, 0.5, 8),
                     c = uniform(rng, 0.2, 4);
        const double r_crit = H * (d + q) / (2 * d + q);
        const auto s = TwoPatchScenario::homogeneous(r_crit + uniform(rng, 0.2, 25), c, d, q, H);
        const double theta = uniform(rng, 0.01, 0.99);
        const double fm = (biomass_at(s, theta + step) - biomass_at(s, theta - step)) / (2 * step);
        const double am = biomass_derivative(s, theta);
        const double fy = (yield_at(s, theta + step) - yield_at(s, theta - step)) / (2 * step);
        const double ay = yield_derivative(s, theta);
        const double em = std::abs(am - fm) / std::abs(am), ey = std::abs(ay - fy) / std::abs(ay);
        worst_m = std::max(worst_m, em);
        worst_y = std::max(worst_y, ey);
        out.require(em <= 1e-4, "biomass derivative mismatch at instance " + std::to_string(k) + "; ");
        out.require(ey <= 1e-4, "yield derivative mismatch at instance " + std::to_string(k) + "; ");
    }
    out.detail << "worst relative error M' " << fmt(worst_m) << ", Y' " << fmt(worst_y);
}

void sign_laws(Outcome& out) {
    std::mt19937_64 rng(5150);
    auto draw = [&](auto pick, auto accept) {
        for (;;) {
            const double d = uniform(rng, 0.2, 4), q = uniform(rng, 0.2, 10), H = uniform(rng, 0.5, 8),
                         c = uniform(rng, 0.2, 4);
            const auto probe = TwoPatchScenario::homogeneous(1, c, d, q, H);
            const ThresholdSet t = thresholds(probe);
            if (!accept(probe, t))
                continue;
            const auto s = probe.with_growth(pick(t));
            if (persistence_guaranteed(s))
                return s;
        }
    };
    auto any = [](const TwoPatchScenario&, const ThresholdSet&) { return true; };
    int fails[4] = {0, 0, 0, 0};
    for (int k = 0; k < 100; ++k) {
        const auto big = draw([&](const ThresholdSet& t) { return t.r_M + uniform(rng, 0.01, 20); }, any);
        for (int j = 0; j <= 100; ++j)
            if (!(biomass_derivative(big, j / 100.0) < 0)) {
                ++fails[0];
                break;
            }

        const auto small = draw(
            [&](const ThresholdSet& t) { return t.r_crit + uniform(rng, 0.01, 0.99) * (t.r_m - t.r_crit); },
            [](const TwoPatchScenario&, const ThresholdSet& t) { return t.r_m > t.r_crit; });
        for (int j = 0; j <= 100; ++j)
            if (!(biomass_derivative(small, j / 100.0) > 0)) {
                ++fails[1];
                break;
            }

        const auto strong = draw([&](const ThresholdSet& t) { return t.r_M + uniform(rng, 0.01, 20); },
                                 [](const TwoPatchScenario& s, const ThresholdSet&) {
                                     return s.q() >= 2 * s.budget();
                                 });
        if (*sweep_theta(strong, Objective::Yield, 1e-2).theta_star != 0.0)
            ++fails[2];

        const auto large = draw([&](const ThresholdSet& t) { return t.r_M + uniform(rng, 0.01, 20); }, any);
        for (int j = 50; j <= 100; ++j)
            if (!(yield_derivative(large, j / 100.0) < 0)) {
                ++fails[3];
                break;
            }
    }
    out.require(fails[0] == 0, "M' not negative above r_M; ");
    out.require(fails[1] == 0, "M' not positive below r_m; ");
    out.require(fails[2] == 0, "yield argmax not 0 for r > r_M, q >= 2H; ");
    out.require(fails[3] == 0, "Y' not negative on theta >= 1/2 above r_M; ");
    out.detail << "violations: " << fails[0] << "/" << fails[1] << "/" << fails[2] << "/" << fails[3]
               << " of 100 each";
}

// Central difference of an objective along a grouped allocation's parameter.
double grouped_fd(const Model& m, double H, Objective obj, GroupedAllocation g, double step) {
    auto set = [&](double p) {
        if (auto* t = std::get_if<TwoGroupSplit>(&g.split))
            t->theta = p;
        else
            std::get<WithinGroupSplit>(g.split).delta = p;
        return g.expand(m.size(), H);
    };
    const double p0 = std::holds_alternative<TwoGroupSplit>(g.split) ? std::get<TwoGroupSplit>(g.split).theta
                                                                    : std::get<WithinGroupSplit>(g.split).delta;
    const Vector hp = set(p0 + step), hm = set(p0 - step);
    return (objective_at(m, hp, obj) - objective_at(m, hm, obj)) / (2 * step);
}

struct LimitCase {
    std::string name;
    std::function<Model(double)> model;
    GroupedAllocation alloc;
    Objective objective;
    // scale applied to the raw derivative before comparing to the limit
    std::function<double(double r, double H)> scale;
};

void asymptotic_limits(Outcome& out) {
    const double H = 4;
    auto stream = [](Vector c) {
        return [c](double r) { return Model(Vector::Constant(3, r), c, straight_stream(3, 1, 2)); };
    };
    auto junction = [](Vector c) {
        return [c](double r) { return Model(Vector::Constant(5, r), c, three_one_one(1, 2)); };
    };
    auto per_h = [](double, double h) { return 1.0 / h; };
    auto times_r = [](double r, double) { return r; };
    auto per_rh = [](double r, double h) { return 1.0 / (r * h); };

    const std::vector<LimitCase> cases = {
        {"stream M'/H", stream(vec({2, 2, 1})), {{0, 1}, TwoGroupSplit{0.5, vec({1}), vec({0.4, 0.6})}},
         Objective::Biomass, per_h},
        {"stream rM'", stream(vec({1, 1, 1})), {{0, 1, 2}, WithinGroupSplit{2, 0.3, vec({0.7, 0.3})}},
         Objective::Biomass, times_r},
        {"stream Y'/(rH)", stream(vec({2, 2, 1})), {{2}, TwoGroupSplit{0.5, vec({0.4, 0.6}), vec({1})}},
         Objective::Yield, per_rh},
        {"stream Y'/H", stream(vec({1, 1, 1})), {{0, 1, 2}, WithinGroupSplit{2, 0.3, vec({0.7, 0.3})}},
         Objective::Yield, per_h},
        {"3-1-1 M'/H", junction(vec({1, 1, 1, 2, 2})),
         {{3, 4}, TwoGroupSplit{0.5, vec({0.2, 0.3, 0.5}), vec({0.6, 0.4})}}, Objective::Biomass, per_h},
        {"3-1-1 rM'", junction(vec({1, 1, 1, 1, 1})),
         {{0, 1, 2, 3, 4}, WithinGroupSplit{3, 0.3, vec({0.1, 0.2, 0.3, 0.4})}}, Objective::Biomass, times_r},
        {"3-1-1 Y'/(rH)", junction(vec({1, 1, 1, 2, 2})),
         {{0, 1, 2}, TwoGroupSplit{0.5, vec({0.6, 0.4}), vec({0.2, 0.3, 0.5})}}, Objective::Yield, per_rh},
        {"3-1-1 Y'/H", junction(vec({1, 1, 1, 1, 1})),
         {{0, 1, 2, 3, 4}, WithinGroupSplit{3, 0.3, vec({0.1, 0.2, 0.3, 0.4})}}, Objective::Yield, per_h},
    };
    for (const auto& c : cases) {
        const double limit = asymptotic_limit(c.model(1e4), c.alloc, c.objective, H);
        double err[2];
        for (int k = 0; k < 2; ++k) {
            const double r = k == 0 ? 1e4 : 2e4;
            const double fd = grouped_fd(c.model(r), H, c.objective, c.alloc, 1e-3) * c.scale(r, H);
            err[k] = std::abs(fd - limit) / std::abs(limit);
        }
        const double ratio = err[1] / err[0];
        out.detail << c.name << ": limit " << fmt(limit) << " err " << fmt(err[0]) << " ratio "
                   << fmt(ratio) << "; ";
        out.require(err[0] <= 0.01, c.name + " not within 1%; ");
        out.require(ratio >= 0.3 && ratio <= 0.7, c.name + " error does not halve; ");
    }
}

void net_flow(Outcome& out) {
    for (Eigen::Index n : {2, 3, 5, 8})
        for (double q : {0.5, 2.0, 7.0})
            for (double c : {0.5, 1.0, 3.0}) {
                const Model m(Vector::Ones(n), Vector::Constant(n, c), straight_stream(n, 1.5, q));
                const Vector I = effective_net_flow(m).flow;
                bool exact = I(0) == -q / c && I(n - 1) == q / c;
                for (Eigen::Index i = 1; i + 1 < n; ++i)
                    exact = exact && I(i) == 0.0;
                out.require(exact, "straight stream n=" + std::to_string(n) + " not exact; ");
            }
    const Model net(Vector::Ones(5), Vector::Ones(5), three_one_one(1, 2));
    out.require(effective_net_flow(net).flow == vec({-2, -2, -2, 4, 2}), "3-1-1 values; ");
    std::mt19937_64 rng(31337);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const Model m = random_model(rng, 1 + k % 8, 0, 1);
        worst = std::max(worst, std::abs(effective_net_flow(m).flow.sum()));
    }
    out.require(worst <= 1e-12, "sum of net flows exceeds 1e-12; ");
    out.detail << "max |sum I| over 100 random models " << fmt(worst);
}

void junction_strategy(Outcome& out) {
    const double H = 4;
    const std::vector<std::pair<std::string, Vector>> alternatives = {
        {"top-even", vec({H / 3, H / 3, H / 3, 0, 0})},
        {"patch1", vec({H, 0, 0, 0, 0})},
        {"patch5", vec({0, 0, 0, 0, H})},
        {"uniform", Vector::Constant(5, H / 5)},
    };
    const Vector junction = vec({0, 0, 0, H, 0});
    auto biomass = [&](double r, const Vector& h) {
        const Model m(Vector::Constant(5, r), Vector::Ones(5), three_one_one(1, 2));
        return total_biomass(solve_equilibrium(m, h));
    };
    // r >= 200: log-spaced up to 1e5
    bool large_ok = true;
    for (int k = 0; k <= 60; ++k) {
        const double r = 200 * std::pow(500.0, k / 60.0);
        const double ref = biomass(r, junction);
        for (const auto& [name, h] : alternatives)
            if (!(ref > biomass(r, h))) {
                large_ok = false;
                out.detail << name << " ties or wins at r=" << fmt(r) << "; ";
            }
    }
    out.require(large_ok, "patch-4-only not strictly best for r >= 200; ");
    // small r: some alternative leaves more biomass; report the last r at
    // which each one still wins
    bool crossing = false;
    for (const auto& [name, h] : alternatives) {
        double last = -1;
        for (double r = 1; r < 200; r += 0.5)
            if (biomass(r, h) > biomass(r, junction))
                last = r;
        if (last > 0) {
            crossing = true;
            out.detail << name << " wins up to r=" << fmt(last) << "; ";
        }
    }
    out.require(crossing, "no alternative beats patch 4 at small r; ");
}

void optimizer_cross_validation(Outcome& out) {
    std::mt19937_64 rng(4242);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
        const Eigen::Index n = 2 + k % 3;
        const Model m = random_model(rng, n, 0.5, 6);
        const OptimizationProblem p{m, uniform(rng, 0.5, 4), k % 2 ? Objective::Yield : Objective::Biomass};
        const auto grid = simplex_grid_search(p, 100);
        const auto pg = projected_gradient(p, 8);
        const double shortfall = (grid.value - pg.value) / std::max(std::abs(grid.value), 1e-300);
        worst = std::max(worst, shortfall);
        out.require(pg.value >= grid.value - 1e-6 * std::abs(grid.value),
                    "instance " + std::to_string(k) + " projected gradient below grid; ");
    }
    out.detail << "largest relative shortfall " << fmt(worst);
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_seconds;
        Check run;
    };
    const std::vector<Criterion> criteria = {
        {"1 two-patch yield optima", 5, yield_optima},
        {"2 two-patch biomass regimes", 2, biomass_regimes},
        {"3 threshold formulas", 1, threshold_formulas},
        {"4 tie law", 20, tie_law},
        {"5 unconstrained MSY identity", 10, msy_identity},
        {"6 derivative oracles", 30, derivative_oracles},
        {"7 derivative sign laws", 60, sign_laws},
        {"8 large-growth limits", 30, asymptotic_limits},
        {"9 effective net flow", 5, net_flow},
        {"10 junction harvesting beats alternatives", 10, junction_strategy},
        {"11 optimizer cross-validation", 60, optimizer_cross_validation},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.require(false, std::string("exception: ") + e.what() + "; ");
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.require(secs < c.limit_seconds, "runtime over " + fmt(c.limit_seconds) + " s; ");
        failed += !out.ok;
        std::printf("%s  %-44s %7.2fs  %s\n", out.ok ? "PASS" : "FAIL", c.name, secs,
                    out.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
