#include "gvp/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gvp/errors.hpp"
#include "gvp/linalg.hpp"
#include "gvp/simd.hpp"

namespace gvp {

// Lawson-Hanson sweep state. Passive members keep their gathered Gram
// column (all target rows) so the dual recomputes in O(|T| k) instead of
// touching the full matrix.
struct ConeProjector::Impl {
    const EnergyForm& form;
    std::vector<std::size_t> target;
    double kkt_tol;
    int max_iterations;                     // per resolve() call
    std::vector<double> b;                  // current right-hand side
    std::vector<double> w;                  // target-local weights
    std::vector<int> passive;               // target-local indices, entry order
    std::vector<char> in_passive;
    std::vector<char> blocked;              // columns the factor rejected
    ActiveSetFactor factor;
    std::vector<std::vector<double>> cols;  // gathered columns, passive order
    std::vector<double> bp;                 // b gathered in passive order
    std::vector<double> z;                  // unconstrained passive solution
    std::vector<double> r;                  // dual G_TT w - b
    long iterations = 0;                    // lifetime pivot count
    int last_iterations = 0;

    Impl(const EnergyForm& f, std::vector<std::size_t> t, double tol,
         int max_iter)
        : form(f), target(std::move(t)), kkt_tol(tol),
          max_iterations(max_iter > 0
                             ? max_iter
                             : static_cast<int>(10 * target.size()) + 32),
          b(target.size(), 0.0), w(target.size(), 0.0),
          in_passive(target.size(), 0), blocked(target.size(), 0),
          factor(target.size()), r(target.size(), 0.0) {
        if (target.empty())
            throw ValidationError("target_empty",
                                  "projection target has no nodes");
    }

    bool append(int j) {
        const double* row = form.row(target[j]);
        std::vector<double> grow(passive.size());
        for (std::size_t m = 0; m < passive.size(); ++m)
            grow[m] = row[target[passive[m]]];
        if (!factor.append(grow.data(), row[target[j]])) {
            blocked[j] = 1;
            w[j] = 0.0;
            return false;
        }
        passive.push_back(j);
        in_passive[j] = 1;
        std::vector<double> col(target.size());
        for (std::size_t t = 0; t < target.size(); ++t)
            col[t] = row[target[t]];
        cols.push_back(std::move(col));
        bp.push_back(b[j]);
        return true;
    }

    void remove(std::size_t m) {
        const int j = passive[m];
        factor.remove(m);
        passive.erase(passive.begin() + m);
        cols.erase(cols.begin() + m);
        bp.erase(bp.begin() + m);
        in_passive[j] = 0;
        w[j] = 0.0;
    }

    void solve() {
        z.resize(passive.size());
        factor.solve(bp.data(), z.data());
    }

    void recompute_dual() {
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t m = 0; m < passive.size(); ++m) {
            const double wm = w[passive[m]];
            if (wm != 0.0)
                simd::axpy(wm, cols[m].data(), r.data(), r.size());
        }
        for (std::size_t t = 0; t < r.size(); ++t)
            r[t] -= b[t];
    }

    // Inner loop: line-step from the current feasible w toward the passive
    // solution z, dropping one blocking variable at a time, until z >= 0.
    // Returns false if the per-call budget ran out.
    bool settle(long budget_end) {
        while (!passive.empty()) {
            solve();
            std::size_t block = passive.size();
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < passive.size(); ++m) {
                if (z[m] > 0.0)
                    continue;
                const double wv = w[passive[m]];
                const double denom = wv - z[m];
                const double ratio = denom > 0.0 ? wv / denom : 0.0;
                if (block == passive.size() || ratio < alpha ||
                    (ratio == alpha && passive[m] < passive[block])) {
                    alpha = ratio;
                    block = m;
                }
            }
            if (block == passive.size()) {
                for (std::size_t m = 0; m < passive.size(); ++m)
                    w[passive[m]] = z[m];
                return true;
            }
            for (std::size_t m = 0; m < passive.size(); ++m)
                w[passive[m]] += alpha * (z[m] - w[passive[m]]);
            remove(block);
            if (++iterations > budget_end)
                return false;
        }
        return true;
    }

    void resolve(const std::vector<double>& rhs) {
        if (rhs.size() != target.size())
            throw ValidationError("rhs_size_mismatch",
                                  "right-hand side length differs from "
                                  "target size");
        b = rhs;
        for (std::size_t m = 0; m < passive.size(); ++m)
            bp[m] = b[passive[m]];

        const long start = iterations;
        const long budget_end = start + max_iterations;
        bool converged = false;
        if (settle(budget_end)) {
            const double entry_tol = 0.5 * kkt_tol;
            while (iterations <= budget_end) {
                recompute_dual();
                int enter = -1;
                double worst = -entry_tol;
                for (std::size_t j = 0; j < target.size(); ++j)
                    if (!in_passive[j] && !blocked[j] && r[j] < worst) {
                        worst = r[j];
                        enter = static_cast<int>(j);
                    }
                if (enter < 0) {
                    converged = true;
                    break;
                }
                ++iterations;
                if (!append(enter))
                    continue; // rejected for conditioning; scan without it
                if (!settle(budget_end))
                    break;
            }
        }
        last_iterations = static_cast<int>(iterations - start);
        if (!converged) {
            double low = 0.0;
            for (double v : r)
                low = std::min(low, v);
            throw ConvergenceError(
                "projection_not_converged",
                "active-set projection hit its iteration cap (" +
                    std::to_string(last_iterations) +
                    " pivots this call, worst dual entry " +
                    std::to_string(low) + ")");
        }
    }

    void preload(const std::vector<double>& warm) {
        for (std::size_t j = 0; j < target.size(); ++j) {
            if (warm[j] > 0.0 && !in_passive[j]) {
                if (append(static_cast<int>(j)))
                    w[j] = warm[j];
            }
        }
    }
};

ConeProjector::ConeProjector(const EnergyForm& form,
                             std::vector<std::size_t> target, double kkt_tol,
                             int max_iterations_per_call)
    : impl_(new Impl(form, std::move(target),
                     kkt_tol > 0.0 ? kkt_tol : 1e-8,
                     max_iterations_per_call)) {}

ConeProjector::~ConeProjector() = default;
ConeProjector::ConeProjector(ConeProjector&&) noexcept = default;

void ConeProjector::resolve(const std::vector<double>& b) { impl_->resolve(b); }

const std::vector<std::size_t>& ConeProjector::target() const {
    return impl_->target;
}
const std::vector<double>& ConeProjector::weights() const { return impl_->w; }
const std::vector<double>& ConeProjector::residuals() const {
    return impl_->r;
}
const std::vector<int>& ConeProjector::support() const {
    return impl_->passive;
}
int ConeProjector::last_iterations() const { return impl_->last_iterations; }

double ConeProjector::potential_at(std::size_t global_row) const {
    const double* row = impl_->form.row(global_row);
    double acc = 0.0;
    for (std::size_t m = 0; m < impl_->passive.size(); ++m)
        acc += impl_->w[impl_->passive[m]] *
               row[impl_->target[impl_->passive[m]]];
    return acc;
}

void ConeProjector::solve_on_support(const std::vector<double>& rhs_support,
                                     std::vector<double>& out) const {
    out.resize(impl_->passive.size());
    impl_->factor.solve(rhs_support.data(), out.data());
}

void ConeProjector::preload(const std::vector<double>& warm_weights) {
    if (warm_weights.size() != impl_->target.size())
        throw ValidationError("warm_size_mismatch",
                              "warm-start length differs from target size");
    impl_->preload(warm_weights);
}

ConeQpSolution min_quadratic_over_cone(const EnergyForm& form,
                                       const std::vector<std::size_t>& target,
                                       const std::vector<double>& b,
                                       const ConeQpOptions& options) {
    if (b.size() != target.size())
        throw ValidationError("rhs_size_mismatch",
                              "right-hand side length differs from target "
                              "size");
    ConeProjector proj(form, target,
                       options.kkt_tol > 0.0 ? options.kkt_tol : 1e-8,
                       options.max_iterations);
    if (options.warm && options.warm->size() == target.size())
        proj.preload(*options.warm);
    bool converged = true;
    try {
        proj.resolve(b);
    } catch (const ConvergenceError&) {
        converged = false;
    }
    ConeQpSolution out;
    out.weights = proj.weights();
    out.residuals = proj.residuals();
    out.iterations = proj.last_iterations();
    out.converged = converged;
    return out;
}

namespace {

double positive_part_mass(const std::vector<double>& s) {
    double m = 0.0;
    for (double v : s)
        if (v > 0.0)
            m += v;
    return m;
}

} // namespace

ProjectionResult project_onto_cone(const EnergyContext& ctx,
                                   const SignedMeasure& nu,
                                   const std::vector<std::size_t>& target_nodes,
                                   const ConeQpOptions& options) {
    const std::vector<double> s = ctx.scatter(nu);
    std::vector<double> q(s.size());
    ctx.form.matvec(s, q);

    std::vector<double> b(target_nodes.size());
    for (std::size_t t = 0; t < target_nodes.size(); ++t)
        b[t] = q[target_nodes[t]];

    const double nu_energy = std::max(ctx.form.quad(s), 0.0);
    ConeQpOptions opt = options;
    if (opt.kkt_tol <= 0.0)
        opt.kkt_tol = 1e-8 * (1.0 + std::sqrt(nu_energy));

    ConeQpSolution sol = min_quadratic_over_cone(ctx.form, target_nodes, b, opt);
    if (!sol.converged) {
        double worst = 0.0;
        for (double v : sol.residuals)
            worst = std::min(worst, v);
        throw ConvergenceError("projection_not_converged",
                               "active-set projection hit its iteration cap (" +
                                   std::to_string(sol.iterations) +
                                   " iterations, worst dual entry " +
                                   std::to_string(worst) + ")");
    }

    ProjectionResult result;
    result.projected.plate_index = -1;
    result.projected.weights = sol.weights;
    result.kkt_residuals = sol.residuals;
    result.iterations = sol.iterations;

    double compl_sum = 0.0;
    double mass = 0.0;
    for (std::size_t t = 0; t < target_nodes.size(); ++t) {
        compl_sum += sol.residuals[t] * sol.weights[t];
        mass += sol.weights[t];
    }
    result.complementarity_residual = compl_sum;
    result.swept_mass = mass;

    std::vector<double> diff = s;
    for (std::size_t t = 0; t < target_nodes.size(); ++t)
        diff[target_nodes[t]] -= sol.weights[t];
    result.distance = std::sqrt(std::max(ctx.form.quad(diff), 0.0));

    if (ctx.kernel.alpha <= 2.0 || ctx.kernel.h)
        result.mass_bound = ctx.kernel.max_principle_h() * positive_part_mass(s);
    return result;
}

ProjectionResult balayage(const EnergyContext& ctx, const SignedMeasure& nu,
                          int plate, const ConeQpOptions& options) {
    ProjectionResult result =
        project_onto_cone(ctx, nu, ctx.plate_index.at(plate), options);
    result.projected.plate_index = plate;
    return result;
}

EquilibriumResult equilibrium_measure(const EnergyContext& ctx,
                                      const std::vector<std::size_t>& target_nodes,
                                      const ConeQpOptions& options) {
    if (target_nodes.empty())
        throw ValidationError("target_empty", "equilibrium target has no nodes");
    std::vector<double> ones(target_nodes.size(), 1.0);
    ConeQpOptions opt = options;
    if (opt.kkt_tol <= 0.0)
        opt.kkt_tol = 2e-8;
    ConeQpSolution sol =
        min_quadratic_over_cone(ctx.form, target_nodes, ones, opt);
    if (!sol.converged)
        throw ConvergenceError("equilibrium_not_converged",
                               "active-set sweep hit its iteration cap (" +
                                   std::to_string(sol.iterations) +
                                   " iterations)");

    EquilibriumResult result;
    result.measure.plate_index = -1;
    result.measure.weights = sol.weights;
    result.iterations = sol.iterations;
    result.potential_at_nodes.resize(target_nodes.size());
    double mass = 0.0;
    double compl_sum = 0.0;
    for (std::size_t t = 0; t < target_nodes.size(); ++t) {
        result.potential_at_nodes[t] = sol.residuals[t] + 1.0;
        mass += sol.weights[t];
        compl_sum += sol.residuals[t] * sol.weights[t];
    }
    result.capacity = mass;
    // w'Gw = r'w + b'w with b = 1, so the energy is mass + complementarity.
    result.energy = mass + compl_sum;
    return result;
}

double capacity(const EnergyContext& ctx,
                const std::vector<std::size_t>& target_nodes) {
    return equilibrium_measure(ctx, target_nodes).capacity;
}

double green_energy(const EnergyContext& ctx, const SignedMeasure& nu,
                    int plate) {
    const auto& plate_nodes = ctx.plate_index.at(plate);
    for (const SignedAtom& atom : nu.atoms) {
        if (atom.weight == 0.0)
            continue;
        const std::size_t idx = ctx.index_of(atom.position);
        for (std::size_t pj : plate_nodes)
            if (pj == idx)
                throw ValidationError("atoms_on_plate",
                                      "Green energy needs nu supported off "
                                      "the plate");
    }
    const ProjectionResult p = balayage(ctx, nu, plate);
    return p.distance * p.distance;
}

} // namespace gvp
