#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "../equilibrium.hpp"
#include "../errors.hpp"
#include "../model.hpp"
#include "../network.hpp"
#include "../optimizer.hpp"

namespace streamharvest::cli {

inline constexpr int kSchemaVersion = 1;

/// Axes of a two-patch regime map: q/H and r, each an inclusive range.
struct RegimeMapGrid {
    std::pair<double, double> q_over_h;
    std::pair<double, double> r;
    int q_steps;
    int r_steps;
};

struct ScenarioFile {
    int schema_version = kSchemaVersion;
    Model model;
    double budget;
    Objective objective = Objective::Biomass;
    Method method = Method::Auto;
    std::uint64_t seed = 42;
    int starts = 8;
    std::optional<Vector> harvest;
    std::optional<double> theta;
    std::optional<RegimeMapGrid> regime_map;

    OptimizationProblem problem() const {
        return OptimizationProblem{model, budget, objective, method, seed, starts};
    }
};

namespace detail {

inline std::string where(const YAML::Node& node) {
    const auto mark = node.Mark();
    return mark.line >= 0 ? " (line " + std::to_string(mark.line + 1) + ")" : "";
}

[[noreturn]] inline void fail(const std::string& key, const YAML::Node& node, const std::string& why) {
    throw ParseError("'" + key + "'" + where(node) + ": " + why);
}

// Rejects keys outside `allowed` and repeated keys.
inline void check_keys(const YAML::Node& map, const std::string& context,
                       const std::set<std::string>& allowed) {
    if (!map.IsMap())
        fail(context, map, "expected a mapping");
    std::set<std::string> seen;
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        const std::string path = context.empty() ? key : context + "." + key;
        if (!allowed.count(key))
            fail(path, kv.first, "unknown key");
        if (!seen.insert(key).second)
            fail(path, kv.first, "duplicate key");
    }
}

inline YAML::Node require(const YAML::Node& map, const std::string& key, const std::string& path) {
    const YAML::Node node = map[key];
    if (!node)
        fail(path, map, "missing required key");
    return node;
}

inline double number(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar())
        fail(path, node, "expected a number");
    double x;
    try {
        x = node.as<double>();
    } catch (const YAML::Exception&) {
        fail(path, node, "expected a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(x))
        fail(path, node, "must be finite");
    return x;
}

inline long long integer(const YAML::Node& node, const std::string& path) {
    const double x = number(node, path);
    if (x != std::floor(x) || std::abs(x) > 9.0e15)
        fail(path, node, "expected an integer");
    return static_cast<long long>(x);
}

inline std::string text(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar())
        fail(path, node, "expected a string");
    return node.Scalar();
}

inline Vector number_list(const YAML::Node& node, const std::string& path,
                          std::optional<Eigen::Index> expected = std::nullopt) {
    if (!node.IsSequence())
        fail(path, node, "expected a list of numbers");
    if (expected && static_cast<Eigen::Index>(node.size()) != *expected)
        fail(path, node, "expected " + std::to_string(*expected) + " entries, got " +
                             std::to_string(node.size()));
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = number(node[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline std::pair<double, double> range(const YAML::Node& node, const std::string& path) {
    const Vector v = number_list(node, path, 2);
    if (!(v(0) <= v(1)))
        fail(path, node, "range must be ordered [low, high]");
    return {v(0), v(1)};
}

inline Matrix parse_movement(const YAML::Node& node, Eigen::Index n, const std::string& path) {
    check_keys(node, path, {"matrix", "edges", "generator", "d", "q", "n"});
    const int forms = (node["matrix"] ? 1 : 0) + (node["edges"] ? 1 : 0) + (node["generator"] ? 1 : 0);
    if (forms != 1)
        fail(path, node, "give exactly one of matrix, edges or generator");

    if (!node["generator"])
        for (const char* k : {"d", "q", "n"})
            if (node[k])
                fail(path + "." + k, node[k], "only valid with a generator");

    if (const YAML::Node mat = node["matrix"]) {
        const std::string p = path + ".matrix";
        if (!mat.IsSequence() || static_cast<Eigen::Index>(mat.size()) != n)
            fail(p, mat, "expected " + std::to_string(n) + " rows");
        Matrix a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            a.row(i) = number_list(mat[static_cast<std::size_t>(i)],
                                   p + "[" + std::to_string(i) + "]", n).transpose();
        return a;
    }
    if (const YAML::Node edges = node["edges"]) {
        const std::string p = path + ".edges";
        if (!edges.IsSequence())
            fail(p, edges, "expected a list of [from, to, rate]");
        Matrix a = Matrix::Zero(n, n);
        std::set<std::pair<long long, long long>> seen;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const std::string ep = p + "[" + std::to_string(k) + "]";
            const YAML::Node e = edges[k];
            if (!e.IsSequence() || e.size() != 3)
                fail(ep, e, "expected [from, to, rate]");
            const long long from = integer(e[0], ep + ".from");
            const long long to = integer(e[1], ep + ".to");
            const double rate = number(e[2], ep + ".rate");
            if (from < 1 || from > n || to < 1 || to > n)
                fail(ep, e, "patch numbers run from 1 to " + std::to_string(n));
            if (from == to)
                fail(ep, e, "self loops are not allowed");
            if (rate < 0.0)
                fail(ep, e, "rate must be nonnegative");
            if (!seen.insert({from, to}).second)
                fail(ep, e, "duplicate edge " + std::to_string(from) + " -> " + std::to_string(to));
            a(to - 1, from - 1) = rate;
        }
        return a;
    }
    const YAML::Node gen = node["generator"];
    const std::string kind = text(gen, path + ".generator");
    const double d = number(require(node, "d", path + ".d"), path + ".d");
    const double q = number(require(node, "q", path + ".q"), path + ".q");
    if (!(d > 0.0))
        fail(path + ".d", node["d"], "must be positive");
    if (q < 0.0)
        fail(path + ".q", node["q"], "must be nonnegative");
    if (kind == "straight_stream") {
        if (node["n"] && integer(node["n"], path + ".n") != n)
            fail(path + ".n", node["n"], "disagrees with model.n");
        return straight_stream(n, d, q);
    }
    if (kind == "three_one_one") {
        if (n != 5)
            fail(path + ".generator", gen, "three_one_one needs model.n = 5");
        if (node["n"])
            fail(path + ".n", node["n"], "not used by three_one_one");
        return three_one_one(d, q);
    }
    fail(path + ".generator", gen, "unknown generator '" + kind + "'");
}

inline Objective parse_objective(const YAML::Node& node) {
    const std::string s = text(node, "objective");
    if (s == "biomass")
        return Objective::Biomass;
    if (s == "yield")
        return Objective::Yield;
    fail("objective", node, "expected biomass or yield");
}

inline Method parse_method(const YAML::Node& node) {
    const std::string s = text(node, "method");
    for (Method m : {Method::Auto, Method::ThetaSweep, Method::SimplexGrid, Method::ProjectedGradient})
        if (s == to_string(m))
            return m;
    fail("method", node, "expected auto, theta_sweep, simplex_grid or projected_gradient");
}

} // namespace detail

/// Parses and validates a scenario document. All failures are ParseError.
inline ScenarioFile parse_scenario_text(const std::string& source) {
    using namespace detail;
    std::vector<YAML::Node> docs;
    try {
        docs = YAML::LoadAll(source);
    } catch (const YAML::Exception& e) {
        throw ParseError("malformed document (line " + std::to_string(e.mark.line + 1) +
                         "): " + e.msg);
    }
    if (docs.size() != 1)
        throw ParseError("expected exactly one document, found " + std::to_string(docs.size()));
    const YAML::Node root = docs.front();
    check_keys(root, "", {"schema_version", "model", "budget", "objective", "method", "seed",
                          "starts", "harvest", "theta", "regime_map"});

    const YAML::Node ver = require(root, "schema_version", "schema_version");
    if (integer(ver, "schema_version") != kSchemaVersion)
        fail("schema_version", ver, "unsupported version (expected 1)");

    const YAML::Node mn = require(root, "model", "model");
    check_keys(mn, "model", {"n", "r", "c", "movement"});
    const long long n = integer(require(mn, "n", "model.n"), "model.n");
    if (n < 1 || n > 100000)
        fail("model.n", mn["n"], "must be a positive patch count");
    const Vector r = number_list(require(mn, "r", "model.r"), "model.r", n);
    const Vector c = number_list(require(mn, "c", "model.c"), "model.c", n);
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (!(c(i) > 0.0))
            fail("model.c", mn["c"], "competition rates must be positive");
    const Matrix a = parse_movement(require(mn, "movement", "model.movement"), n, "model.movement");

    std::optional<Model> model;
    try {
        model.emplace(r, c, a);
    } catch (const ArgumentError& e) {
        fail("model.movement", mn["movement"], e.what());
    }

    const YAML::Node bn = require(root, "budget", "budget");
    const double budget = number(bn, "budget");
    if (!(budget > 0.0))
        fail("budget", bn, "must be positive");

    ScenarioFile sf{kSchemaVersion, *model, budget};
    if (root["objective"])
        sf.objective = parse_objective(root["objective"]);
    if (root["method"])
        sf.method = parse_method(root["method"]);
    if (root["seed"]) {
        const long long s = integer(root["seed"], "seed");
        if (s < 0)
            fail("seed", root["seed"], "must be nonnegative");
        sf.seed = static_cast<std::uint64_t>(s);
    }
    if (root["starts"]) {
        const long long s = integer(root["starts"], "starts");
        if (s < 1 || s > 10000)
            fail("starts", root["starts"], "must be between 1 and 10000");
        sf.starts = static_cast<int>(s);
    }
    if (root["harvest"] && root["theta"])
        fail("theta", root["theta"], "give either harvest or theta, not both");
    if (const YAML::Node hn = root["harvest"]) {
        Vector h = number_list(hn, "harvest", n);
        if ((h.array() < 0.0).any())
            fail("harvest", hn, "efforts must be nonnegative");
        if (std::abs(h.sum() - budget) > 1e-12 * std::max(1.0, budget))
            fail("harvest", hn, "efforts must sum to the budget");
        sf.harvest = std::move(h);
    }
    if (const YAML::Node tn = root["theta"]) {
        const double t = number(tn, "theta");
        if (!(t >= 0.0 && t <= 1.0))
            fail("theta", tn, "must lie in [0, 1]");
        if (n != 2)
            fail("theta", tn, "only meaningful for two patches");
        sf.theta = t;
    }
    if (const YAML::Node gn = root["regime_map"]) {
        check_keys(gn, "regime_map", {"q_over_H", "r", "steps"});
        RegimeMapGrid g{};
        g.q_over_h = range(require(gn, "q_over_H", "regime_map.q_over_H"), "regime_map.q_over_H");
        g.r = range(require(gn, "r", "regime_map.r"), "regime_map.r");
        const YAML::Node st = require(gn, "steps", "regime_map.steps");
        const Vector steps = number_list(st, "regime_map.steps", 2);
        for (Eigen::Index i = 0; i < 2; ++i)
            if (steps(i) != std::floor(steps(i)) || steps(i) < 1 || steps(i) > 10000)
                fail("regime_map.steps", st, "step counts must be integers in [1, 10000]");
        g.q_steps = static_cast<int>(steps(0));
        g.r_steps = static_cast<int>(steps(1));
        if (!(g.q_over_h.first > 0.0))
            fail("regime_map.q_over_H", gn["q_over_H"], "q/H must be positive");
        sf.regime_map = g;
    }
    return sf;
}

inline ScenarioFile parse_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot read scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

} // namespace streamharvest::cli
