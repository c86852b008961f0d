#include "gvp/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gvp/errors.hpp"
#include "gvp/projection.hpp"

namespace gvp {

namespace {

std::vector<std::size_t> usable_nodes(const EnergyContext& ctx, int plate,
                                      const std::vector<std::vector<char>>* mask) {
    const std::size_t n = ctx.condenser.plates[plate].nodes.size();
    std::vector<std::size_t> out;
    if (mask && static_cast<std::size_t>(plate) < mask->size() &&
        !(*mask)[plate].empty()) {
        const auto& m = (*mask)[plate];
        if (m.size() != n)
            throw ValidationError("mask_size_mismatch",
                                  "node mask length differs from plate " +
                                      std::to_string(plate) + " node count");
        for (std::size_t j = 0; j < n; ++j)
            if (m[j])
                out.push_back(j);
    } else {
        out.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            out[j] = j;
    }
    if (out.empty())
        throw ValidationError("plate_fully_masked",
                              "plate " + std::to_string(plate) +
                                  " has no usable nodes");
    return out;
}

void check_plate_index(const EnergyContext& ctx, int ell) {
    if (ell < 0 ||
        static_cast<std::size_t>(ell) >= ctx.condenser.plates.size())
        throw ValidationError("plate_index_out_of_range",
                              "plate " + std::to_string(ell));
}

std::string verdict_for(double a_ell, double sigma, double tol) {
    if (std::abs(a_ell - sigma) <= tol)
        return "boundary";
    return a_ell < sigma ? "solvable" : "nonsolvable";
}

} // namespace

SolvabilityReport sigma_threshold(const EnergyContext& ctx, int ell,
                                  const SolvabilityOptions& options) {
    check_plate_index(ctx, ell);
    const Condenser& cond = ctx.condenser;

    // Plate ell must not touch any other plate, whatever the signs; the
    // swept measure lives on ell alone only under that separation.
    const auto ell_nodes = usable_nodes(ctx, ell, options.node_mask);
    const double gap2 = cond.min_gap * cond.min_gap;
    for (std::size_t i = 0; i < cond.plates.size(); ++i) {
        if (static_cast<int>(i) == ell)
            continue;
        for (std::size_t j : usable_nodes(ctx, static_cast<int>(i),
                                          options.node_mask)) {
            const Point& p = cond.plates[i].nodes[j];
            for (std::size_t l : ell_nodes) {
                const Point& q = cond.plates[ell].nodes[l];
                double d2 = 0.0;
                for (std::size_t d = 0; d < p.size(); ++d) {
                    const double t = p[d] - q[d];
                    d2 += t * t;
                }
                if (d2 < gap2)
                    throw ValidationError(
                        "plates_not_disjoint",
                        "plate " + std::to_string(i) + " comes within the "
                        "minimum gap of plate " + std::to_string(ell));
            }
        }
    }

    AuxiliaryOptions aux_options = options;
    aux_options.constrained.clear();
    for (std::size_t i = 0; i < cond.plates.size(); ++i)
        if (static_cast<int>(i) != ell)
            aux_options.constrained.push_back(static_cast<int>(i));
    const SolveReport aux = solve_auxiliary(ctx, aux_options);

    // nu* = chi + the constrained signed components of the minimizer.
    VectorMeasure constrained_part = aux.minimizer;
    std::fill(constrained_part.components[ell].weights.begin(),
              constrained_part.components[ell].weights.end(), 0.0);
    SignedMeasure nu = r_map(cond, constrained_part);
    for (const SignedAtom& atom : cond.chi.atoms)
        nu.atoms.push_back(atom);

    std::vector<std::size_t> target;
    target.reserve(ell_nodes.size());
    for (std::size_t j : ell_nodes)
        target.push_back(ctx.plate_index[ell][j]);
    const ProjectionResult proj = project_onto_cone(ctx, nu, target);

    SolvabilityReport rep;
    rep.ell = ell;
    rep.a_ell = cond.a[ell];
    rep.aux_value = aux.value;
    rep.converged = aux.converged;
    rep.auxiliary_minimizer = aux.minimizer;
    rep.swept_measure.plate_index = ell;
    rep.swept_measure.weights.assign(cond.plates[ell].nodes.size(), 0.0);
    const auto& g = cond.g_values[ell];
    double sigma = 0.0;
    for (std::size_t t = 0; t < target.size(); ++t) {
        rep.swept_measure.weights[ell_nodes[t]] = proj.projected.weights[t];
        sigma += g[ell_nodes[t]] * proj.projected.weights[t];
    }
    rep.sigma_ell = sigma;
    rep.verdict_tol =
        options.verdict_tol > 0.0 ? options.verdict_tol : 1e-4 * rep.a_ell;
    rep.verdict = verdict_for(rep.a_ell, sigma, rep.verdict_tol);
    if (cond.plates[ell].truncation_radius)
        rep.truncation_radius = *cond.plates[ell].truncation_radius;
    return rep;
}

std::vector<ExhaustionRecord> exhaustion_sweep(const EnergyContext& ctx,
                                               int ell,
                                               const std::vector<double>& radii,
                                               const SolvabilityOptions& options) {
    check_plate_index(ctx, ell);
    const Condenser& cond = ctx.condenser;
    if (!cond.plates[ell].unbounded)
        throw ValidationError("plate_not_unbounded",
                              "plate " + std::to_string(ell) +
                                  " carries no unbounded flag");
    if (radii.empty())
        throw ValidationError("radii_empty", "the sweep needs radii");
    for (std::size_t r = 1; r < radii.size(); ++r)
        if (!(radii[r] > radii[r - 1]))
            throw ValidationError("radii_not_increasing",
                                  "radii must be strictly increasing");

    // Start from the caller's mask and tighten the ell-plate per radius.
    std::vector<std::vector<char>> mask(cond.plates.size());
    if (options.node_mask)
        mask = *options.node_mask;
    mask.resize(cond.plates.size());
    std::vector<char> ell_base = mask[ell];
    if (ell_base.empty())
        ell_base.assign(cond.plates[ell].nodes.size(), 1);

    const double window =
        options.window_radius > 0.0 ? options.window_radius : radii.front();
    const double window_eps = 1e-9 * (1.0 + window);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<ExhaustionRecord> records;
    VectorMeasure warm_full, warm_aux;
    bool have_warm_full = false, have_warm_aux = false;
    for (double radius : radii) {
        ExhaustionRecord rec;
        rec.truncation_radius = radius;
        rec.a_ell = cond.a[ell];
        rec.value = nan;
        rec.aux_value = nan;
        rec.sigma_estimate = nan;
        rec.window_mass = nan;

        const double edge = radius + 1e-9 * (1.0 + radius);
        mask[ell] = ell_base;
        for (std::size_t j = 0; j < mask[ell].size(); ++j)
            if (cond.plates[ell].nodes[j][0] > edge)
                mask[ell][j] = 0;

        try {
            SolveOptions full_options = options;
            full_options.node_mask = &mask;
            if (have_warm_full)
                full_options.warm = &warm_full;
            const SolveReport full = solve_gauss(ctx, full_options);
            rec.value = full.value;
            rec.solver_converged = full.converged;
            warm_full = full.minimizer;
            have_warm_full = true;

            double in_window = 0.0;
            const auto& wv = full.minimizer.components[ell].weights;
            for (std::size_t j = 0; j < wv.size(); ++j) {
                if (wv[j] == 0.0)
                    continue;
                const Point& p = cond.plates[ell].nodes[j];
                double d2 = 0.0;
                for (double coord : p)
                    d2 += coord * coord;
                if (d2 <= (window + window_eps) * (window + window_eps))
                    in_window += wv[j];
            }
            rec.window_mass = in_window;
        } catch (const Error& e) {
            rec.solver_converged = false;
            rec.error = e.code() + ": " + e.what();
        }

        try {
            SolvabilityOptions sigma_options = options;
            sigma_options.node_mask = &mask;
            if (have_warm_aux)
                sigma_options.warm = &warm_aux;
            SolvabilityReport sr = sigma_threshold(ctx, ell, sigma_options);
            rec.aux_value = sr.aux_value;
            rec.sigma_estimate = sr.sigma_ell;
            rec.verdict = sr.verdict;
            if (!sr.converged)
                rec.solver_converged = false;
            warm_aux = std::move(sr.auxiliary_minimizer);
            have_warm_aux = true;
        } catch (const Error& e) {
            if (!rec.error.empty())
                rec.error += "; ";
            rec.error += e.code() + ": " + e.what();
        }

        records.push_back(std::move(rec));
    }
    return records;
}

CoarseBound coarse_bound_check(const EnergyContext& ctx, int ell) {
    check_plate_index(ctx, ell);
    const Condenser& cond = ctx.condenser;
    double a_rest = 0.0;
    for (std::size_t i = 0; i < cond.a.size(); ++i)
        if (static_cast<int>(i) != ell)
            a_rest += cond.a[i];
    CoarseBound out;
    out.bound = ctx.kernel.max_principle_h() * cond.g_sup() *
                (cond.chi.positive_mass() + 2.0 * a_rest / cond.g_inf());
    out.triggered = cond.a[ell] > out.bound;
    return out;
}

ConeScanReport solvable_cone_scan(const EnergyContext& ctx, int ell,
                                  const std::vector<double>& a_ell_grid,
                                  const SolvabilityOptions& options) {
    check_plate_index(ctx, ell);
    const Condenser& cond = ctx.condenser;
    if (cond.plates.size() != 2)
        throw ValidationError("cone_scan_precondition",
                              "the scan needs exactly two plates");
    const int other = 1 - ell;
    if (!(cond.plates[ell].sign < 0) || !(cond.plates[other].sign > 0))
        throw ValidationError("cone_scan_precondition",
                              "plate " + std::to_string(ell) +
                                  " must be the negative plate");
    for (const SignedAtom& atom : cond.chi.atoms)
        if (atom.weight != 0.0)
            throw ValidationError("cone_scan_precondition",
                                  "the scan needs chi = 0");

    // With chi = 0 the auxiliary solve never sees a_ell, so one threshold
    // classifies the whole grid.
    const SolvabilityReport base = sigma_threshold(ctx, ell, options);
    ConeScanReport out;
    out.sigma_ell = base.sigma_ell;
    out.ratio = base.sigma_ell / cond.a[other];
    out.grid = a_ell_grid;
    out.verdicts.reserve(a_ell_grid.size());
    for (double trial : a_ell_grid) {
        const double tol =
            options.verdict_tol > 0.0 ? options.verdict_tol : 1e-4 * trial;
        out.verdicts.push_back(verdict_for(trial, base.sigma_ell, tol));
    }
    return out;
}

} // namespace gvp
