#include "gvp/kernel.hpp"

#include <cmath>
#include <limits>

#include "gvp/linalg.hpp"
#include "gvp/parallel.hpp"
#include "gvp/simd.hpp"

namespace gvp {

void KernelSpec::check() const {
    if (dim < 2)
        throw ValidationError("kernel_dim_too_small", "dim must be >= 2");
    if (!(alpha > 0.0) || !(alpha < dim))
        throw ValidationError("kernel_alpha_out_of_range",
                              "alpha must lie in (0, dim)");
    if (h && !(*h >= 1.0))
        throw ValidationError("kernel_h_below_one", "h must be >= 1");
}

double KernelSpec::max_principle_h() const {
    if (h)
        return *h;
    if (alpha <= 2.0)
        return 1.0;
    throw ValidationError("kernel_h_required",
                          "alpha > 2 needs an explicit maximum-principle h");
}

double evaluate(const KernelSpec& kernel, const Point& x, const Point& y) {
    double rsq = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double dx = x[d] - y[d];
        rsq = rsq + dx * dx;
    }
    if (rsq == 0.0)
        return std::numeric_limits<double>::infinity();
    const double q = 0.5 * kernel.exponent();
    return simd::pow_rsq(rsq, q, simd::classify_exponent(q));
}

Point EnergyForm::node(std::size_t i) const {
    Point p(dim);
    for (int d = 0; d < dim; ++d)
        p[d] = coord(d)[i];
    return p;
}

std::vector<const double*> EnergyForm::coord_ptrs() const {
    std::vector<const double*> ptrs(dim);
    for (int d = 0; d < dim; ++d)
        ptrs[d] = coord(d);
    return ptrs;
}

void EnergyForm::matvec(const double* w, double* out) const {
    parallel_for(0, n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            out[i] = simd::dot(row(i), w, n);
    });
}

double EnergyForm::quad(const double* w) const {
    std::vector<double> t(n);
    matvec(w, t.data());
    return simd::dot(w, t.data(), n);
}

double EnergyForm::pairing(const double* w, const double* v) const {
    std::vector<double> t(n);
    matvec(v, t.data());
    return simd::dot(w, t.data(), n);
}

EnergyForm assemble_gram(const KernelSpec& kernel,
                         const std::vector<Point>& nodes,
                         const std::vector<double>& nn_dist, double sigma) {
    kernel.check();
    if (!(sigma > 0.0) || !(sigma <= 1.0))
        throw ValidationError("sigma_out_of_range", "sigma must be in (0, 1]");
    const std::size_t n = nodes.size();
    if (nn_dist.size() != n)
        throw ValidationError("nn_dist_size_mismatch",
                              "one spacing per node required");

    EnergyForm form;
    form.n = n;
    form.dim = kernel.dim;
    form.sigma = sigma;
    form.nn_dist = nn_dist;
    form.nodes_soa.resize(std::size_t(kernel.dim) * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes[i].size() != std::size_t(kernel.dim))
            throw ValidationError("node_dim_mismatch",
                                  "node dimension differs from kernel dim");
        for (int d = 0; d < kernel.dim; ++d)
            form.nodes_soa[std::size_t(d) * n + i] = nodes[i][d];
    }

    form.gram.resize(n * n);
    const double q = 0.5 * kernel.exponent();
    const simd::PowKind kind = simd::classify_exponent(q);
    const auto cols = form.coord_ptrs();
    parallel_for(0, n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* row = form.gram.data() + i * n;
            simd::riesz_row(cols.data(), kernel.dim, nodes[i].data(), q, row,
                            n);
            const double di = sigma * nn_dist[i];
            row[i] = simd::pow_rsq(di * di, q, kind);
        }
    });

    // Positive-definiteness guard. The ridge only ever touches the diagonal,
    // so potentials built from off-diagonal entries stay exact.
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        trace += form.gram[i * n + i];
    std::vector<double> lower;
    if (cholesky_factor(form.gram.data(), n, lower)) {
        form.cholesky_ok = true;
        form.ridge = 0.0;
        return form;
    }
    for (double eps = 1e-12; eps <= 1e-3; eps *= 10.0) {
        const double ridge = eps * trace / double(n);
        std::vector<double> trial = form.gram;
        for (std::size_t i = 0; i < n; ++i)
            trial[i * n + i] += ridge;
        if (cholesky_factor(trial.data(), n, lower)) {
            form.gram.swap(trial);
            form.ridge = ridge;
            form.cholesky_ok = true;
            return form;
        }
    }
    throw ValidationError("gram_ill_conditioned",
                          "ridge escalation exhausted at eps = 1e-3");
}

} // namespace gvp
