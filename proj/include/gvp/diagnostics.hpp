// Solvability diagnostics for a condenser with one distinguished unbounded
// plate: the moment threshold carried by the swept measure, the verdict it
// implies, compact-exhaustion sweeps, and the coarse a-priori bound.
#pragma once

#include <string>
#include <vector>

#include "gvp/energy.hpp"
#include "gvp/measures.hpp"
#include "gvp/solver.hpp"

namespace gvp {

struct SolvabilityOptions : AuxiliaryOptions {
    // Half-width of the boundary verdict band; 0 picks 1e-4 * a_ell. A
    // band keeps discretization noise near equality from flipping the
    // verdict between reruns.
    double verdict_tol = 0.0;
    // Sweeps only: radius of the fixed mass-tracking ball about the
    // origin; 0 picks the smallest truncation radius.
    double window_radius = 0.0;
};

struct SolvabilityReport {
    int ell = 0;
    double sigma_ell = 0.0; // <g, swept measure> on plate ell
    double a_ell = 0.0;
    std::string verdict;    // "solvable", "nonsolvable", or "boundary"
    double aux_value = 0.0;
    // The projection of chi + sum of the constrained signed components onto
    // plate ell, as plate-local weights (masked nodes stay zero).
    DiscreteMeasure swept_measure;
    // The auxiliary minimizer behind the threshold; useful as a warm start
    // for a nearby rerun.
    VectorMeasure auxiliary_minimizer;
    double truncation_radius = 0.0; // 0 when the plate declares none
    double verdict_tol = 0.0;
    bool converged = true; // auxiliary solve reached its gap tolerance
};

// Computes the threshold for plate ell: solves the auxiliary problem with
// every other plate constrained, sweeps the resulting signed measure onto
// plate ell, and compares <g, swept> against a_ell. The verdict is
// "boundary" within verdict_tol of equality, "solvable" below the
// threshold, "nonsolvable" above it. Plate ell must be disjoint from every
// other plate.
SolvabilityReport sigma_threshold(const EnergyContext& ctx, int ell,
                                  const SolvabilityOptions& options = {});

struct ExhaustionRecord {
    double truncation_radius = 0.0;
    double value = 0.0;        // full-problem value on the truncation
    double aux_value = 0.0;
    double sigma_estimate = 0.0;
    double a_ell = 0.0;
    double window_mass = 0.0;  // ell-component mass inside the reference ball
    std::string verdict;
    bool solver_converged = false;
    std::string error;         // nonempty when this radius failed
};

// Runs the full solve and the threshold estimate on a nested family of
// truncations of plate ell: for each radius R the plate keeps the nodes
// with first coordinate at most R, so the feasible sets nest and the values
// are nonincreasing. The reference window for mass tracking is the ball of
// radius radii[0] about the origin, fixed across the sweep. Failures at one
// radius are recorded in that entry and the sweep continues.
std::vector<ExhaustionRecord> exhaustion_sweep(const EnergyContext& ctx,
                                               int ell,
                                               const std::vector<double>& radii,
                                               const SolvabilityOptions& options = {});

struct CoarseBound {
    double bound = 0.0;
    bool triggered = false; // a_ell > bound forces the nonsolvable verdict
};

// bound = h * g_sup * (chi+(X) + 2 |a| without the ell entry / g_inf),
// with g_sup and g_inf taken over the finite node set (the continuum
// statement needs g bounded; on nodes that always holds).
CoarseBound coarse_bound_check(const EnergyContext& ctx, int ell);

struct ConeScanReport {
    double sigma_ell = 0.0;
    double ratio = 0.0; // sigma_ell / a of the positive plate
    std::vector<double> grid;
    std::vector<std::string> verdicts; // per trial a_ell, same bands
};

// Two-plate scan (one positive plate, plate ell negative and unbounded,
// chi = 0): the threshold does not depend on a_ell, so one auxiliary solve
// fixes the verdict boundary and each trial a_ell is classified against it.
ConeScanReport solvable_cone_scan(const EnergyContext& ctx, int ell,
                                  const std::vector<double>& a_ell_grid,
                                  const SolvabilityOptions& options = {});

} // namespace gvp
