// Scenario files (strict JSON schema), command orchestration, and report
// emission for the command-line tool.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvp/measures.hpp"
#include "gvp/kernel.hpp"
#include "gvp/solver.hpp"

namespace gvp {

struct SolverSettings {
    double gap_tol = 1e-9;
    long max_iterations = 0;
    double sigma = 0.5;
    bool full_identity_check = false;
    AuxiliaryMethod aux_method = AuxiliaryMethod::nested;
    // Plates keeping their moment constraint in auxiliary runs; empty picks
    // every plate without the unbounded flag.
    std::vector<int> constrained;
};

struct SweepSettings {
    std::vector<double> radii;
    double window_radius = 0.0; // 0 picks radii.front()
    int ell = -1;               // -1 picks the unique unbounded plate
};

// A parsed, validated scenario: the condenser is fully built (nodes
// generated from the shapes) and echo_json holds the normalized input with
// all defaults materialized, so re-parsing it reproduces the condenser.
struct Scenario {
    KernelSpec kernel;
    Condenser condenser;
    SolverSettings solver;
    SweepSettings sweep;
    std::uint64_t seed = 0;
    int target_plate = 0;
    std::string echo_json;
};

// Both throw ValidationError with the offending JSON path in the message,
// or IoError when the file cannot be read.
Scenario parse_scenario(const std::string& path, long long seed_override = -1);
Scenario parse_scenario_text(const std::string& text,
                             long long seed_override = -1);

struct RunArgs {
    std::string command;
    std::string scenario_path;
    std::string out_dir = ".";
    double gap_tol = 0.0;      // > 0 overrides the scenario
    long max_iterations = -1;  // >= 0 overrides the scenario
    long long seed = -1;       // >= 0 overrides the scenario
    std::string mode = "full"; // solve only: "full" or "aux"
};

// Executes one command (solve, project, equilibrium, capacity, diagnose,
// sweep, selftest), writes report.json (and results.csv for sweeps) into
// out_dir, and returns the process exit code: 0 success, 2 validation
// error, 3 solver non-convergence, 4 I/O error.
int run_command(const RunArgs& args);

} // namespace gvp
