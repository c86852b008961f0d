// Riesz kernel evaluation and the regularized Gram matrix that realizes the
// energy inner product on the discrete node set.
#pragma once

#include <optional>
#include <vector>

#include "gvp/errors.hpp"
#include "gvp/geometry.hpp"

namespace gvp {

struct KernelSpec {
    double alpha = 2.0;
    int dim = 3;
    // Maximum-principle constant. Defaults to 1 for alpha <= 2; for larger
    // alpha the diagnostics that need it refuse to run unless supplied.
    std::optional<double> h;

    double exponent() const { return alpha - dim; }
    double max_principle_h() const; // throws ValidationError when unknown
    void check() const;             // throws ValidationError
};

// kappa_alpha(x,y) = |x-y|^(alpha-dim); +inf at x == y.
double evaluate(const KernelSpec& kernel, const Point& x, const Point& y);

struct EnergyForm {
    std::size_t n = 0;
    int dim = 0;
    double sigma = 0.5;
    std::vector<double> gram;      // row-major n x n, guard ridge applied
    std::vector<double> nodes_soa; // dim blocks of n coordinates
    std::vector<double> nn_dist;
    double ridge = 0.0;
    bool cholesky_ok = false;

    const double* row(std::size_t i) const { return gram.data() + i * n; }
    const double* coord(int d) const { return nodes_soa.data() + std::size_t(d) * n; }
    Point node(std::size_t i) const;
    std::vector<const double*> coord_ptrs() const;

    // Quadratic form helpers in the Gram metric. All reductions use the
    // canonical SIMD order, so values are identical across backends.
    void matvec(const double* w, double* out) const;
    double quad(const double* w) const;              // w' G w
    double pairing(const double* w, const double* v) const; // w' G v

    void matvec(const std::vector<double>& w, std::vector<double>& out) const {
        matvec(w.data(), out.data());
    }
    double quad(const std::vector<double>& w) const { return quad(w.data()); }
    double pairing(const std::vector<double>& w,
                   const std::vector<double>& v) const {
        return pairing(w.data(), v.data());
    }
};

// Off-diagonal entries are exact kernel values; the diagonal is
// kappa(sigma*d_i) for the nearest-neighbor distance d_i. The guard then
// attempts a Cholesky factorization, escalating a diagonal ridge
// eps*trace/n from eps = 1e-12 by factors of 10 until it succeeds; beyond
// eps = 1e-3 the discretization is reported as ill-conditioned.
EnergyForm assemble_gram(const KernelSpec& kernel,
                         const std::vector<Point>& nodes,
                         const std::vector<double>& nn_dist, double sigma);

} // namespace gvp
