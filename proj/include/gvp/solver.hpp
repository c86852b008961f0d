// Conditional-gradient solvers for the constrained minimization of the
// Gauss functional over products of scaled simplices, the projection-reduced
// auxiliary problem, and the weighted-potential optimality report.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gvp/energy.hpp"
#include "gvp/measures.hpp"

namespace gvp {

struct SolveOptions {
    // Stop when the Frank-Wolfe gap falls below gap_tol * (1 + |value|).
    double gap_tol = 1e-9;
    // 0 picks 200 * (number of optimized weights).
    long max_iterations = 0;
    // Optional starting point; clamped to the cone and renormalized onto
    // the moment constraints. Null starts from uniform weights.
    const VectorMeasure* warm = nullptr;
    // Per plate, per node: nonzero marks the node usable. Null or an empty
    // inner vector leaves the whole plate usable. Masked nodes keep weight
    // zero and are excluded from optimality scans.
    const std::vector<std::vector<char>>* node_mask = nullptr;
    // Re-derive the value identity from fresh matrix-vector products at
    // every iterate (O(N^2) per iterate; meant for small instances).
    bool full_identity_check = false;
};

// Weighted-potential optimality data. For each plate i, with the potential
// W^i at the plate nodes and eta_i = <W^i, mu^i>:
//   lower_violation_i   = max over usable nodes of (eta_i g(x)/a_i - W^i(x))+
//   support_violation_i = max over positive-weight nodes of
//                         |a_i W^i(x) - eta_i g(x)|
// potential_scale/moment_scale carry the natural magnitudes so callers can
// test violation <= tol * scale.
struct KktReport {
    std::vector<double> eta;
    std::vector<double> lower_violation;
    std::vector<double> support_violation;
    std::vector<double> potential_scale;
    std::vector<double> moment_scale;
    // | sum_i eta_i - (|R mu|^2 + value)/2 | / (1 + |sum|), from fresh
    // quadratic forms.
    double sum_rule_residual = 0.0;
};

struct SolveReport {
    VectorMeasure minimizer;
    double value = 0.0;
    double duality_gap = 0.0;
    std::vector<double> feasibility_residuals; // per plate |<g,mu^i> - a_i|
    KktReport kkt;
    long iterations = 0;
    bool converged = false;
    // Max over iterates of the relative mismatch between the two readings
    // of the objective (quadratic-plus-linear vs shifted-norm form),
    // including a final check from fresh matrix-vector products.
    double identity_residual = 0.0;
    double wallclock_seconds = 0.0;
};

// Full problem: minimize |R mu|^2 + 2 kappa(chi, R mu) over nonnegative
// plate components with <g, mu^i> = a_i on every plate. Away-step
// Frank-Wolfe with exact line search; per-plate linear oracles pick the
// vertex (a_i/g_j) e_j with the lowest gradient value, ties to the lowest
// node index. Hitting the iteration cap returns the best iterate with
// converged = false; it never throws for that.
SolveReport solve_gauss(const EnergyContext& ctx,
                        const SolveOptions& options = {});

enum class AuxiliaryMethod {
    // Outer Frank-Wolfe over the constrained plates with the unconstrained
    // block resolved exactly by cone projection at every step.
    nested,
    // One product-domain solve with the unconstrained block relaxed to the
    // g-mass-bounded cone (bound from the maximum principle constant).
    direct_bound,
};

struct AuxiliaryOptions : SolveOptions {
    std::vector<int> constrained; // J: plate indices keeping their moment
    AuxiliaryMethod method = AuxiliaryMethod::nested;
};

// Projection-reduced problem: minimize over sigma in the J-simplices of
// |chi + R sigma - P(chi + R sigma)|^2 - |chi|^2, the projection running
// over the union of the unconstrained plates' nodes. The report's minimizer
// carries the projected weights on those plates. J = all plates routes to
// solve_gauss.
SolveReport solve_auxiliary(const EnergyContext& ctx,
                            const AuxiliaryOptions& options);

// Optimality report for an arbitrary conforming vector measure, from fresh
// matrix-vector products.
KktReport verify_kkt(const EnergyContext& ctx, const VectorMeasure& mu,
                     const std::vector<std::vector<char>>* node_mask = nullptr);

} // namespace gvp
