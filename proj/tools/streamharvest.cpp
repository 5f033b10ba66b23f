// Command-line front end: equilibria, theta sweeps, optimal allocations,
// net-flow reports and two-patch regime maps, written as CSV.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "streamharvest/cli/commands.hpp"
#include "streamharvest/cli/scenario.hpp"

namespace sh = streamharvest;
namespace cli = streamharvest::cli;

namespace {

struct Options {
    std::string scenario;
    std::string out;
    std::optional<double> resolution;
    std::optional<double> theta;
    std::optional<std::uint64_t> seed;
    bool exact = false;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--scenario", o.scenario, "scenario file")->required();
    sub->add_option("--out", o.out, "output CSV path (default: stdout)");
}

int run(const std::string& command, const Options& o) {
    cli::ScenarioFile sf = cli::parse_scenario(o.scenario);
    if (o.seed)
        sf.seed = *o.seed;
    sh::Table table;
    if (command == "equilibrium")
        table = cli::cmd_equilibrium(sf, o.theta);
    else if (command == "sweep")
        table = cli::cmd_sweep(sf, o.resolution.value_or(1e-3));
    else if (command == "optimize")
        table = cli::cmd_optimize(sf);
    else if (command == "netflow")
        table = cli::cmd_netflow(sf, std::cerr);
    else
        table = cli::cmd_regime_map(sf, o.exact, o.resolution.value_or(1e-2));
    sh::emit_csv(table, o.out, std::cout);
    return cli::kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibria and optimal harvest allocation on stream networks"};
    app.require_subcommand(1);
    Options o;

    auto* eq = app.add_subcommand("equilibrium", "equilibrium densities at one allocation");
    add_common(eq, o);
    eq->add_option("--theta", o.theta, "upstream share of the budget (two patches)")
        ->check(CLI::Range(0.0, 1.0));

    auto* sweep = app.add_subcommand("sweep", "objective landscape over theta (two patches)");
    add_common(sweep, o);
    sweep->add_option("--resolution", o.resolution, "theta grid spacing in [1e-4, 1e-1]");

    auto* opt = app.add_subcommand("optimize", "best allocation of the budget");
    add_common(opt, o);
    opt->add_option("--seed", o.seed, "seed for randomized starts");

    auto* net = app.add_subcommand("netflow", "effective net flow and large-growth advice");
    add_common(net, o);

    auto* map = app.add_subcommand("regime-map", "two-patch verdicts over (q/H, r)");
    add_common(map, o);
    map->add_option("--resolution", o.resolution, "theta spacing for yield sweeps (default 1e-2)");
    map->add_flag("--exact", o.exact, "decide persistence by spectral bound on a theta grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kParseError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, o);
    } catch (const sh::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kIoError;
    } catch (const sh::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return cli::kNumericalError;
    } catch (const std::exception& e) {
        // parse, argument, domain and unsupported-case errors
        std::cerr << "error: " << e.what() << '\n';
        return cli::kParseError;
    }
}
