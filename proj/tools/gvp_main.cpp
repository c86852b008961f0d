// Command-line entry point: flag parsing and dispatch into run_command.
#include <string>

#include "CLI11.hpp"

#include "gvp/scenario.hpp"
#include "gvp/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Gauss variational problem toolkit"};
    app.set_version_flag("--version", gvp::kVersion);

    gvp::RunArgs args;
    app.add_option("command", args.command,
                   "solve | project | equilibrium | capacity | diagnose | "
                   "sweep | selftest")
        ->required();
    app.add_option("--scenario", args.scenario_path, "scenario JSON file");
    app.add_option("--out", args.out_dir, "output directory")
        ->default_val(".");
    app.add_option("--gap-tol", args.gap_tol,
                   "override the solver gap tolerance");
    app.add_option("--max-iters", args.max_iterations,
                   "override the solver iteration cap");
    app.add_option("--seed", args.seed, "override the scenario seed");
    app.add_option("--mode", args.mode, "solve variant: full or aux")
        ->default_val("full");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return gvp::run_command(args);
}
