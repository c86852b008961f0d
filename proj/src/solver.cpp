#include "gvp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "gvp/errors.hpp"
#include "gvp/projection.hpp"
#include "gvp/simd.hpp"

namespace gvp {

namespace {

enum class BlockKind { simplex, capped_cone };

// One optimized plate: either the scaled simplex {w >= 0 : <g,w> = cap} or
// the capped cone {w >= 0 : <g,w> <= cap}.
struct Block {
    int plate = 0;
    BlockKind kind = BlockKind::simplex;
    double cap = 0.0;
    std::vector<std::size_t> nodes; // plate-local usable node indices
};

// A chosen extreme point of one block: the atom (cap/g_j) e_j, or the
// cone's zero vertex (node = -1).
struct Vertex {
    int node = -1;
    double lin = 0.0;           // <grad, vertex>
    double weight = 0.0;        // cap / g_j
    std::size_t global = 0;
    double signed_weight = 0.0; // weight * plate sign
};

struct ScanResult {
    std::vector<Vertex> fw;   // per-block linear minimization oracle pick
    std::vector<Vertex> away; // per-block steepest active vertex
    double gap_fw = 0.0;      // <grad, w - v_fw>, the duality gap
    double gap_away = 0.0;    // <grad, v_away - w>
    double away_gamma_max = std::numeric_limits<double>::infinity();
};

double dot_n(const std::vector<double>& a, const std::vector<double>& b) {
    return simd::dot(a.data(), b.data(), a.size());
}

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

// The moving iterate: per-block weights, their signed global scatter y, and
// the potential field q = G(chi + y), kept in step with sparse updates.
struct Iterate {
    const EnergyContext& ctx;
    std::vector<Block> blocks;
    std::vector<std::vector<double>> w;
    std::vector<double> y;
    std::vector<double> q;
    std::vector<double> qchi;

    explicit Iterate(const EnergyContext& c, std::vector<Block> bl)
        : ctx(c), blocks(std::move(bl)) {
        w.resize(blocks.size());
        for (std::size_t bi = 0; bi < blocks.size(); ++bi)
            w[bi].assign(ctx.condenser.plates[blocks[bi].plate].nodes.size(),
                         0.0);
        y.assign(ctx.size(), 0.0);
        q.assign(ctx.size(), 0.0);
        qchi.assign(ctx.size(), 0.0);
        ctx.form.matvec(ctx.chi_vec, qchi);
    }

    double plate_sign(std::size_t bi) const {
        return ctx.condenser.plates[blocks[bi].plate].sign;
    }
    const std::vector<double>& plate_g(std::size_t bi) const {
        return ctx.condenser.g_values[blocks[bi].plate];
    }
    std::size_t global_of(std::size_t bi, std::size_t j) const {
        return ctx.plate_index[blocks[bi].plate][j];
    }

    double moment(std::size_t bi) const {
        const auto& g = plate_g(bi);
        double m = 0.0;
        for (std::size_t j : blocks[bi].nodes)
            m += g[j] * w[bi][j];
        return m;
    }

    void init_uniform() {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            if (blocks[bi].kind == BlockKind::capped_cone)
                continue; // the cone starts at its zero vertex
            const auto& g = plate_g(bi);
            double gsum = 0.0;
            for (std::size_t j : blocks[bi].nodes)
                gsum += g[j];
            const double v = blocks[bi].cap / gsum;
            for (std::size_t j : blocks[bi].nodes)
                w[bi][j] = v;
        }
    }

    void init_warm(const VectorMeasure& warm) {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const int plate = blocks[bi].plate;
            if (static_cast<std::size_t>(plate) >= warm.components.size())
                continue;
            const auto& src = warm.components[plate].weights;
            for (std::size_t j : blocks[bi].nodes)
                if (j < src.size())
                    w[bi][j] = std::max(src[j], 0.0);
        }
        renormalize();
        // A block the warm start leaves empty falls back to uniform.
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            if (blocks[bi].kind == BlockKind::simplex && moment(bi) <= 0.0) {
                const auto& g = plate_g(bi);
                double gsum = 0.0;
                for (std::size_t j : blocks[bi].nodes)
                    gsum += g[j];
                const double v = blocks[bi].cap / gsum;
                for (std::size_t j : blocks[bi].nodes)
                    w[bi][j] = v;
            }
        }
    }

    void renormalize() {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            for (std::size_t j : blocks[bi].nodes)
                if (w[bi][j] < 0.0)
                    w[bi][j] = 0.0;
            const double m = moment(bi);
            if (blocks[bi].kind == BlockKind::simplex) {
                if (m > 0.0 && m != blocks[bi].cap) {
                    const double scale = blocks[bi].cap / m;
                    for (std::size_t j : blocks[bi].nodes)
                        w[bi][j] *= scale;
                }
            } else if (m > blocks[bi].cap) {
                const double scale = blocks[bi].cap / m;
                for (std::size_t j : blocks[bi].nodes)
                    w[bi][j] *= scale;
            }
        }
    }

    // Recomputes y and q from scratch (O(N^2)); kills incremental drift.
    void refresh() {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const double sign = plate_sign(bi);
            for (std::size_t j : blocks[bi].nodes)
                if (w[bi][j] != 0.0)
                    y[global_of(bi, j)] += sign * w[bi][j];
        }
        std::vector<double> s(y.size());
        for (std::size_t k = 0; k < y.size(); ++k)
            s[k] = y[k] + ctx.chi_vec[k];
        ctx.form.matvec(s, q);
    }

    // w <- s*w + t*vertex per block, with matching updates of y and
    // q = s*q + (1-s)*qchi + t * sum_i signed_V_i * G column(k_i).
    void apply_step(double s, double t, const std::vector<Vertex>& verts) {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            double* wb = w[bi].data();
            for (std::size_t j : blocks[bi].nodes)
                wb[j] *= s;
            if (verts[bi].node >= 0)
                wb[verts[bi].node] += t * verts[bi].weight;
        }
        simd::scal(s, y.data(), y.size());
        simd::scal(s, q.data(), q.size());
        simd::axpy(1.0 - s, qchi.data(), q.data(), q.size());
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            if (verts[bi].node < 0)
                continue;
            y[verts[bi].global] += t * verts[bi].signed_weight;
            simd::axpy(t * verts[bi].signed_weight,
                       ctx.form.row(verts[bi].global), q.data(), q.size());
        }
    }

    // Zeroes coordinates an away step drove to (or just below) zero.
    void clamp_after_away(const std::vector<Vertex>& verts) {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi)
            if (verts[bi].node >= 0 && w[bi][verts[bi].node] <= 0.0)
                w[bi][verts[bi].node] = 0.0;
    }
};

template <class Pot>
ScanResult scan_blocks(const Iterate& it, Pot&& pot) {
    ScanResult res;
    res.fw.resize(it.blocks.size());
    res.away.resize(it.blocks.size());
    for (std::size_t bi = 0; bi < it.blocks.size(); ++bi) {
        const Block& b = it.blocks[bi];
        const double sign = it.plate_sign(bi);
        const auto& g = it.plate_g(bi);
        double dgw = 0.0;
        double mass_g = 0.0;
        Vertex vf, va;
        bool vf_set = false, va_set = false;
        if (b.kind == BlockKind::capped_cone) {
            vf = Vertex{};
            vf_set = true; // the zero vertex, linear value 0
        }
        for (std::size_t j : b.nodes) {
            const std::size_t k = it.global_of(bi, j);
            const double gval = 2.0 * sign * pot(k);
            const double wj = it.w[bi][j];
            if (wj != 0.0) {
                dgw += gval * wj;
                mass_g += g[j] * wj;
            }
            const double V = b.cap / g[j];
            const double lin = gval * V;
            if (!vf_set || lin < vf.lin) {
                vf = Vertex{static_cast<int>(j), lin, V, k, V * sign};
                vf_set = true;
            }
            if (wj > 0.0 && (!va_set || lin > va.lin)) {
                va = Vertex{static_cast<int>(j), lin, V, k, V * sign};
                va_set = true;
            }
        }
        if (b.kind == BlockKind::capped_cone && mass_g < b.cap &&
            (!va_set || va.lin < 0.0)) {
            va = Vertex{}; // the zero vertex is active and flattest
            va_set = true;
        }
        res.fw[bi] = vf;
        res.gap_fw += dgw - vf.lin;
        if (va_set) {
            res.away[bi] = va;
            res.gap_away += va.lin - dgw;
            if (va.node >= 0) {
                const double c = it.w[bi][va.node];
                if (va.weight > c)
                    res.away_gamma_max = std::min(
                        res.away_gamma_max, c / (va.weight - c));
            } else if (mass_g > 0.0) {
                res.away_gamma_max =
                    std::min(res.away_gamma_max, b.cap / mass_g - 1.0);
            }
        } else {
            res.away[bi] = Vertex{}; // w = 0 cone block: direction is zero
        }
    }
    return res;
}

// |sum_i signed_V_i e_{k_i}|^2 in the Gram metric.
double verts_norm2(const EnergyForm& form, const std::vector<Vertex>& verts) {
    double acc = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        if (verts[i].node < 0)
            continue;
        const double* row = form.row(verts[i].global);
        acc += verts[i].signed_weight * verts[i].signed_weight *
               row[verts[i].global];
        for (std::size_t j = 0; j < i; ++j)
            if (verts[j].node >= 0)
                acc += 2.0 * verts[i].signed_weight * verts[j].signed_weight *
                       row[verts[j].global];
    }
    return acc;
}

// <y_verts, G y> with G y = q - qchi.
double verts_dot_gy(const Iterate& it, const std::vector<Vertex>& verts) {
    double acc = 0.0;
    for (const Vertex& v : verts)
        if (v.node >= 0)
            acc += v.signed_weight * (it.q[v.global] - it.qchi[v.global]);
    return acc;
}

double rel_mismatch(double a, double b) {
    return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
}

VectorMeasure assemble_minimizer(const EnergyContext& ctx, const Iterate& it) {
    VectorMeasure mu;
    mu.components.resize(ctx.condenser.plates.size());
    for (std::size_t i = 0; i < mu.components.size(); ++i) {
        mu.components[i].plate_index = static_cast<int>(i);
        mu.components[i].weights.assign(
            ctx.condenser.plates[i].nodes.size(), 0.0);
    }
    for (std::size_t bi = 0; bi < it.blocks.size(); ++bi)
        mu.components[it.blocks[bi].plate].weights = it.w[bi];
    return mu;
}

void fill_report_tail(const EnergyContext& ctx, SolveReport& rep,
                      const std::vector<std::vector<char>>* mask) {
    rep.feasibility_residuals.resize(ctx.condenser.plates.size());
    for (std::size_t i = 0; i < ctx.condenser.plates.size(); ++i) {
        const auto& g = ctx.condenser.g_values[i];
        const auto& wv = rep.minimizer.components[i].weights;
        double m = 0.0;
        for (std::size_t j = 0; j < wv.size(); ++j)
            m += g[j] * wv[j];
        rep.feasibility_residuals[i] = std::abs(m - ctx.condenser.a[i]);
    }
    rep.kkt = verify_kkt(ctx, rep.minimizer, mask);
    const double fresh = gauss_value(ctx, rep.minimizer);
    rep.identity_residual =
        std::max(rep.identity_residual, rel_mismatch(fresh, rep.value));
}

// Away-step Frank-Wolfe over a product of blocks with the quadratic
// objective read directly from the maintained field q.
SolveReport run_product_fw(const EnergyContext& ctx, std::vector<Block> blocks,
                           const SolveOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    Iterate it(ctx, std::move(blocks));
    if (options.warm)
        it.init_warm(*options.warm);
    else
        it.init_uniform();
    it.renormalize();
    it.refresh();

    long n_opt = 0;
    for (const Block& b : it.blocks)
        n_opt += static_cast<long>(b.nodes.size());
    const long max_iterations =
        options.max_iterations > 0 ? options.max_iterations : 200 * n_opt;
    const double chi_e = ctx.chi_energy;

    SolveReport rep;
    double value = 0.0;
    double worst_identity = 0.0;
    long iter = 0;
    for (;; ++iter) {
        const double dyq = dot_n(it.y, it.q);
        const double dyqx = dot_n(it.y, it.qchi);
        const double dxq = dot_n(ctx.chi_vec, it.q);
        const double lhs = (dyq - dyqx) + 2.0 * (dxq - chi_e);
        const double rhs = (dyq + dxq) - chi_e;
        worst_identity = std::max(worst_identity, rel_mismatch(lhs, rhs));
        value = rhs;
        if (options.full_identity_check) {
            const double e_y = ctx.form.quad(it.y);
            const double px = ctx.form.pairing(ctx.chi_vec, it.y);
            std::vector<double> s(it.y.size());
            for (std::size_t k = 0; k < s.size(); ++k)
                s[k] = it.y[k] + ctx.chi_vec[k];
            worst_identity = std::max(
                worst_identity,
                rel_mismatch(e_y + 2.0 * px, ctx.form.quad(s) - chi_e));
        }

        ScanResult sc = scan_blocks(it, [&](std::size_t k) { return it.q[k]; });
        if (sc.gap_fw <= options.gap_tol * (1.0 + std::abs(value)))
            break;
        if (iter >= max_iterations)
            break;

        const bool away = sc.gap_away > sc.gap_fw &&
                          sc.away_gamma_max > 0.0;
        const std::vector<Vertex>& verts = away ? sc.away : sc.fw;
        const double gap_dir = away ? sc.gap_away : sc.gap_fw;
        const double gamma_cap = away ? sc.away_gamma_max : 1.0;

        const double yn2 = dyq - dyqx;
        double quad_d =
            verts_norm2(ctx.form, verts) - 2.0 * verts_dot_gy(it, verts) + yn2;
        double gamma = gamma_cap;
        if (quad_d > 0.0)
            gamma = std::min(gamma_cap, gap_dir / (2.0 * quad_d));
        if (gamma <= 0.0)
            break; // a zero step cannot make progress

        if (away) {
            it.apply_step(1.0 + gamma, -gamma, verts);
            it.clamp_after_away(verts);
        } else {
            it.apply_step(1.0 - gamma, gamma, verts);
        }

        if ((iter + 1) % 256 == 0) {
            it.renormalize();
            it.refresh();
        }
    }

    it.renormalize();
    it.refresh();
    {
        const double dyq = dot_n(it.y, it.q);
        const double dxq = dot_n(ctx.chi_vec, it.q);
        value = (dyq + dxq) - chi_e;
    }
    ScanResult sc = scan_blocks(it, [&](std::size_t k) { return it.q[k]; });

    rep.minimizer = assemble_minimizer(ctx, it);
    rep.value = value;
    rep.duality_gap = sc.gap_fw;
    rep.iterations = iter;
    rep.converged = sc.gap_fw <= options.gap_tol * (1.0 + std::abs(value));
    rep.identity_residual = worst_identity;
    fill_report_tail(ctx, rep, options.node_mask);
    rep.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return rep;
}

std::vector<Block> simplex_blocks(const EnergyContext& ctx,
                                  const std::vector<int>& plates,
                                  const std::vector<std::vector<char>>* mask) {
    std::vector<Block> blocks;
    blocks.reserve(plates.size());
    for (int i : plates) {
        Block b;
        b.plate = i;
        b.kind = BlockKind::simplex;
        b.cap = ctx.condenser.a[i];
        b.nodes = usable_nodes(ctx, i, mask);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

void check_constrained_set(const EnergyContext& ctx,
                           const std::vector<int>& constrained) {
    const int n_plates = static_cast<int>(ctx.condenser.plates.size());
    if (constrained.empty())
        throw ValidationError("constrained_set_empty",
                              "the constrained set needs at least one plate");
    std::vector<char> in(n_plates, 0);
    for (int i : constrained) {
        if (i < 0 || i >= n_plates)
            throw ValidationError("constrained_set_out_of_range",
                                  "plate index " + std::to_string(i));
        if (in[i])
            throw ValidationError("constrained_set_duplicate",
                                  "plate index " + std::to_string(i) +
                                      " listed twice");
        in[i] = 1;
    }
    for (int i = 0; i < n_plates; ++i)
        if (ctx.condenser.plates[i].sign > 0 && !in[i])
            throw ValidationError(
                "constrained_set_missing_positive_plate",
                "positive plate " + std::to_string(i) +
                    " must keep its moment constraint");
}

SolveReport run_nested_fw(const EnergyContext& ctx,
                          const AuxiliaryOptions& options,
                          const std::vector<int>& free_plates) {
    const auto t0 = std::chrono::steady_clock::now();
    Iterate it(ctx, simplex_blocks(ctx, options.constrained,
                                   options.node_mask));
    if (options.warm)
        it.init_warm(*options.warm);
    else
        it.init_uniform();
    it.renormalize();
    it.refresh();

    // The projection target: the union of the free plates' usable nodes.
    // A node two free plates share belongs to the first one listing it.
    std::vector<std::size_t> target;
    std::vector<std::pair<int, std::size_t>> owner; // target pos -> plate,node
    {
        std::vector<char> seen(ctx.size(), 0);
        for (int ell : free_plates) {
            for (std::size_t j : usable_nodes(ctx, ell, options.node_mask)) {
                const std::size_t k = ctx.plate_index[ell][j];
                if (seen[k])
                    continue;
                seen[k] = 1;
                target.push_back(k);
                owner.emplace_back(ell, j);
            }
        }
    }

    long n_opt = 0;
    for (const Block& b : it.blocks)
        n_opt += static_cast<long>(b.nodes.size());
    const long max_iterations =
        options.max_iterations > 0 ? options.max_iterations : 200 * n_opt;
    const double chi_e = ctx.chi_energy;

    std::vector<double> b_rhs(target.size());
    auto gather_rhs = [&]() {
        for (std::size_t t = 0; t < target.size(); ++t)
            b_rhs[t] = it.q[target[t]];
    };
    gather_rhs();
    double b_scale = 0.0;
    for (double v : b_rhs)
        b_scale = std::max(b_scale, std::abs(v));
    ConeProjector projector(ctx.form, target, 1e-11 * (1.0 + b_scale));
    projector.resolve(b_rhs);

    // Objective pieces from the projector state: with nu = chi + R sigma and
    // u the projected weights, |nu - u|^2 = |nu|^2 - 2 u'b + u'(r + b).
    auto objective = [&]() {
        const double nu2 =
            dot_n(ctx.chi_vec, it.q) + dot_n(it.y, it.q);
        const auto& uw = projector.weights();
        const auto& ur = projector.residuals();
        double ub = 0.0, ugu = 0.0;
        for (std::size_t t = 0; t < target.size(); ++t) {
            ub += uw[t] * b_rhs[t];
            ugu += uw[t] * (ur[t] + b_rhs[t]);
        }
        return nu2 - 2.0 * ub + ugu - chi_e;
    };

    SolveReport rep;
    double value = objective();
    long iter = 0;
    std::vector<double> w_save;
    std::vector<double> y_save(ctx.size()), q_save(ctx.size());
    for (;; ++iter) {
        ScanResult sc = scan_blocks(it, [&](std::size_t k) {
            return it.q[k] - projector.potential_at(k);
        });
        if (sc.gap_fw <= options.gap_tol * (1.0 + std::abs(value)))
            break;
        if (iter >= max_iterations)
            break;

        const bool away = sc.gap_away > sc.gap_fw && sc.away_gamma_max > 0.0;
        const std::vector<Vertex>& verts = away ? sc.away : sc.fw;
        const double gap_dir = away ? sc.gap_away : sc.gap_fw;
        const double gamma_cap = away ? sc.away_gamma_max : 1.0;

        // Curvature of the objective along the direction with the active
        // set frozen: |M y_d|^2 = |y_d|^2 - p'c, where c is G y_d gathered
        // on the support and G_PP p = c.
        const double dyq = dot_n(it.y, it.q);
        const double dyqx = dot_n(it.y, it.qchi);
        double quad_d = verts_norm2(ctx.form, verts) -
                        2.0 * verts_dot_gy(it, verts) + (dyq - dyqx);
        {
            const auto& support = projector.support();
            std::vector<double> c(support.size());
            for (std::size_t m = 0; m < support.size(); ++m) {
                const std::size_t tg = target[support[m]];
                double acc = -(it.q[tg] - it.qchi[tg]);
                for (const Vertex& v : verts)
                    if (v.node >= 0)
                        acc += v.signed_weight * ctx.form.row(tg)[v.global];
                c[m] = acc;
            }
            std::vector<double> p;
            projector.solve_on_support(c, p);
            double pc = 0.0;
            for (std::size_t m = 0; m < support.size(); ++m)
                pc += p[m] * c[m];
            quad_d -= pc;
        }

        double gamma = gamma_cap;
        if (quad_d > 0.0)
            gamma = std::min(gamma_cap, gap_dir / (2.0 * quad_d));
        if (gamma <= 0.0)
            break;

        // The frozen-set step length can overshoot an active-set change;
        // enforce descent of the true objective by halving.
        w_save.clear();
        for (std::size_t bi = 0; bi < it.blocks.size(); ++bi)
            w_save.insert(w_save.end(), it.w[bi].begin(), it.w[bi].end());
        std::copy(it.y.begin(), it.y.end(), y_save.begin());
        std::copy(it.q.begin(), it.q.end(), q_save.begin());
        const double value_before = value;
        bool accepted = false;
        while (true) {
            if (away) {
                it.apply_step(1.0 + gamma, -gamma, verts);
                it.clamp_after_away(verts);
            } else {
                it.apply_step(1.0 - gamma, gamma, verts);
            }
            gather_rhs();
            projector.resolve(b_rhs);
            value = objective();
            if (value <= value_before + 1e-12 * (1.0 + std::abs(value_before))) {
                accepted = true;
                break;
            }
            // restore and retry shorter
            std::size_t off = 0;
            for (std::size_t bi = 0; bi < it.blocks.size(); ++bi) {
                std::copy(w_save.begin() + off,
                          w_save.begin() + off + it.w[bi].size(),
                          it.w[bi].begin());
                off += it.w[bi].size();
            }
            std::copy(y_save.begin(), y_save.end(), it.y.begin());
            std::copy(q_save.begin(), q_save.end(), it.q.begin());
            gamma *= 0.5;
            if (gamma < 1e-16 * gamma_cap || gamma <= 0.0)
                break;
        }
        if (!accepted) {
            gather_rhs();
            projector.resolve(b_rhs);
            value = objective();
            break; // no descent direction survived; report where we stand
        }

        if ((iter + 1) % 256 == 0) {
            it.renormalize();
            it.refresh();
            gather_rhs();
            projector.resolve(b_rhs);
            value = objective();
        }
    }

    it.renormalize();
    it.refresh();
    gather_rhs();
    projector.resolve(b_rhs);
    value = objective();
    ScanResult sc = scan_blocks(it, [&](std::size_t k) {
        return it.q[k] - projector.potential_at(k);
    });

    rep.minimizer = assemble_minimizer(ctx, it);
    const auto& uw = projector.weights();
    for (std::size_t t = 0; t < target.size(); ++t)
        rep.minimizer.components[owner[t].first].weights[owner[t].second] =
            uw[t];
    rep.value = value;
    rep.duality_gap = sc.gap_fw;
    rep.iterations = iter;
    rep.converged = sc.gap_fw <= options.gap_tol * (1.0 + std::abs(value));
    fill_report_tail(ctx, rep, options.node_mask);
    rep.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return rep;
}

} // namespace

SolveReport solve_gauss(const EnergyContext& ctx, const SolveOptions& options) {
    std::vector<int> all(ctx.condenser.plates.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = static_cast<int>(i);
    return run_product_fw(ctx, simplex_blocks(ctx, all, options.node_mask),
                          options);
}

SolveReport solve_auxiliary(const EnergyContext& ctx,
                            const AuxiliaryOptions& options) {
    check_constrained_set(ctx, options.constrained);
    const int n_plates = static_cast<int>(ctx.condenser.plates.size());
    std::vector<char> in(n_plates, 0);
    for (int i : options.constrained)
        in[i] = 1;
    std::vector<int> free_plates;
    for (int i = 0; i < n_plates; ++i)
        if (!in[i])
            free_plates.push_back(i);
    if (free_plates.empty())
        return solve_gauss(ctx, options);

    if (options.method == AuxiliaryMethod::nested)
        return run_nested_fw(ctx, options, free_plates);

    // Direct variant: relax each free plate to the g-mass-bounded cone.
    double a_sum = 0.0;
    for (int i : options.constrained)
        a_sum += ctx.condenser.a[i];
    const double bound =
        ctx.kernel.max_principle_h() *
        (ctx.condenser.chi.positive_mass() +
         2.0 * a_sum / ctx.condenser.g_inf());
    std::vector<Block> blocks =
        simplex_blocks(ctx, options.constrained, options.node_mask);
    for (int ell : free_plates) {
        Block b;
        b.plate = ell;
        b.kind = BlockKind::capped_cone;
        b.cap = bound;
        b.nodes = usable_nodes(ctx, ell, options.node_mask);
        blocks.push_back(std::move(b));
    }
    return run_product_fw(ctx, std::move(blocks), options);
}

KktReport verify_kkt(const EnergyContext& ctx, const VectorMeasure& mu,
                     const std::vector<std::vector<char>>* node_mask) {
    const std::vector<double> q = potential_field(ctx, mu);
    const std::size_t n_plates = ctx.condenser.plates.size();
    KktReport rep;
    rep.eta.assign(n_plates, 0.0);
    rep.lower_violation.assign(n_plates, 0.0);
    rep.support_violation.assign(n_plates, 0.0);
    rep.potential_scale.assign(n_plates, 1.0);
    rep.moment_scale.assign(n_plates, 1.0);

    double eta_sum = 0.0;
    for (std::size_t i = 0; i < n_plates; ++i) {
        const double sign = ctx.condenser.plates[i].sign;
        const double a_i = ctx.condenser.a[i];
        const auto& g = ctx.condenser.g_values[i];
        const auto& wv = mu.components.at(i).weights;
        const auto usable =
            usable_nodes(ctx, static_cast<int>(i), node_mask);

        double eta = 0.0;
        for (std::size_t j : usable)
            eta += sign * q[ctx.plate_index[i][j]] * wv[j];
        rep.eta[i] = eta;
        eta_sum += eta;

        double w_max = 0.0, g_sup = 0.0;
        double lower = 0.0, support = 0.0;
        for (std::size_t j : usable) {
            const double W = sign * q[ctx.plate_index[i][j]];
            w_max = std::max(w_max, std::abs(W));
            g_sup = std::max(g_sup, g[j]);
            lower = std::max(lower, eta * g[j] / a_i - W);
            if (wv[j] > 0.0)
                support = std::max(support, std::abs(a_i * W - eta * g[j]));
        }
        rep.lower_violation[i] = lower;
        rep.support_violation[i] = support;
        rep.potential_scale[i] = 1.0 + w_max + std::abs(eta) * g_sup / a_i;
        rep.moment_scale[i] = 1.0 + a_i * w_max + std::abs(eta) * g_sup;
    }

    const std::vector<double> y = ctx.scatter(mu);
    const double vec_energy = ctx.form.quad(y);
    const double gv = gauss_value(ctx, mu);
    rep.sum_rule_residual = rel_mismatch(eta_sum, 0.5 * (vec_energy + gv));
    return rep;
}

} // namespace gvp
