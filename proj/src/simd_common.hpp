// Shared body of every SIMD backend. A Batch type supplies four-lane IEEE
// ops (load/store/add/sub/mul/div/sqrt/broadcast); the templates below pin
// the operation order so all instantiations round identically.
#pragma once

#include <cmath>
#include <cstddef>

#include "gvp/simd.hpp"

namespace gvp::simd::detail {

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    void (*rsq_row)(const double* const*, std::size_t, const double*, double*,
                    std::size_t);
    void (*riesz_row)(const double* const*, std::size_t, const double*, double,
                      double*, std::size_t);
};

inline double pow_rsq_ref(double rsq, double q, PowKind kind) {
    switch (kind) {
    case PowKind::recip_sqrt:
        return 1.0 / std::sqrt(rsq);
    case PowKind::recip:
        return 1.0 / rsq;
    case PowKind::recip_3half:
        return 1.0 / (rsq * std::sqrt(rsq));
    case PowKind::recip_sq:
        return 1.0 / (rsq * rsq);
    case PowKind::recip_quarter:
        return 1.0 / std::sqrt(std::sqrt(rsq));
    case PowKind::recip_3quarter:
        return 1.0 / (std::sqrt(rsq) * std::sqrt(std::sqrt(rsq)));
    case PowKind::general:
        break;
    }
    return std::pow(rsq, q);
}

template <class B>
double dot_impl(const double* x, const double* y, std::size_t n) {
    const std::size_t head = n & ~std::size_t{3};
    B acc = B::broadcast(0.0);
    for (std::size_t i = 0; i < head; i += 4)
        acc = B::add(acc, B::mul(B::load(x + i), B::load(y + i)));
    double l[4];
    B::store(l, acc);
    double s = (l[0] + l[1]) + (l[2] + l[3]);
    for (std::size_t i = head; i < n; ++i)
        s += x[i] * y[i];
    return s;
}

template <class B>
void axpy_impl(double a, const double* x, double* y, std::size_t n) {
    const std::size_t head = n & ~std::size_t{3};
    const B va = B::broadcast(a);
    for (std::size_t i = 0; i < head; i += 4)
        B::store(y + i, B::add(B::load(y + i), B::mul(va, B::load(x + i))));
    for (std::size_t i = head; i < n; ++i)
        y[i] = y[i] + a * x[i];
}

template <class B>
void scal_impl(double a, double* y, std::size_t n) {
    const std::size_t head = n & ~std::size_t{3};
    const B va = B::broadcast(a);
    for (std::size_t i = 0; i < head; i += 4)
        B::store(y + i, B::mul(va, B::load(y + i)));
    for (std::size_t i = head; i < n; ++i)
        y[i] = a * y[i];
}

// Squared distances accumulate dimension by dimension in declaration order.
template <class B>
void rsq_row_impl(const double* const* coords, std::size_t dim,
                  const double* p, double* out, std::size_t n) {
    const std::size_t head = n & ~std::size_t{3};
    for (std::size_t i = 0; i < head; i += 4) {
        B acc = B::broadcast(0.0);
        for (std::size_t d = 0; d < dim; ++d) {
            B dx = B::sub(B::load(coords[d] + i), B::broadcast(p[d]));
            acc = B::add(acc, B::mul(dx, dx));
        }
        B::store(out + i, acc);
    }
    for (std::size_t i = head; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            double dx = coords[d][i] - p[d];
            acc = acc + dx * dx;
        }
        out[i] = acc;
    }
}

template <class B>
void apply_pow(double* v, std::size_t n, double q, PowKind kind) {
    const std::size_t head = n & ~std::size_t{3};
    const B one = B::broadcast(1.0);
    switch (kind) {
    case PowKind::recip_sqrt:
        for (std::size_t i = 0; i < head; i += 4)
            B::store(v + i, B::div(one, B::sqrt(B::load(v + i))));
        break;
    case PowKind::recip:
        for (std::size_t i = 0; i < head; i += 4)
            B::store(v + i, B::div(one, B::load(v + i)));
        break;
    case PowKind::recip_3half:
        for (std::size_t i = 0; i < head; i += 4) {
            B r = B::load(v + i);
            B::store(v + i, B::div(one, B::mul(r, B::sqrt(r))));
        }
        break;
    case PowKind::recip_sq:
        for (std::size_t i = 0; i < head; i += 4) {
            B r = B::load(v + i);
            B::store(v + i, B::div(one, B::mul(r, r)));
        }
        break;
    case PowKind::recip_quarter:
        for (std::size_t i = 0; i < head; i += 4)
            B::store(v + i, B::div(one, B::sqrt(B::sqrt(B::load(v + i)))));
        break;
    case PowKind::recip_3quarter:
        for (std::size_t i = 0; i < head; i += 4) {
            B t = B::sqrt(B::load(v + i));
            B::store(v + i, B::div(one, B::mul(t, B::sqrt(t))));
        }
        break;
    case PowKind::general:
        // std::pow is the same libm call on every backend.
        for (std::size_t i = 0; i < head; ++i)
            v[i] = std::pow(v[i], q);
        break;
    }
    for (std::size_t i = head; i < n; ++i)
        v[i] = pow_rsq_ref(v[i], q, kind);
}

template <class B>
void riesz_row_impl(const double* const* coords, std::size_t dim,
                    const double* p, double q, double* out, std::size_t n) {
    rsq_row_impl<B>(coords, dim, p, out, n);
    apply_pow<B>(out, n, q, classify_exponent(q));
}

template <class B>
constexpr Ops make_ops() {
    return Ops{&dot_impl<B>, &axpy_impl<B>, &scal_impl<B>, &rsq_row_impl<B>,
               &riesz_row_impl<B>};
}

extern const Ops scalar_ops;
#if GVP_HAVE_AVX2_TU
extern const Ops avx2_ops;
#endif
#if GVP_HAVE_NEON_TU
extern const Ops neon_ops;
#endif

} // namespace gvp::simd::detail
