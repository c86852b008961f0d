// Runtime-dispatched vector kernels. Every backend (scalar reference, AVX2,
// NEON) implements the same canonical arithmetic: reductions run four
// independent lanes over the body, collapse as (l0+l1)+(l2+l3), then fold the
// tail sequentially. Each lane op is a correctly-rounded IEEE operation, so
// the backends agree bitwise and the choice of backend never changes results.
#pragma once

#include <cstddef>

namespace gvp::simd {

enum class Backend { scalar, avx2, neon };

// Resolved once per process from the CPU and the GVP_SIMD environment
// variable (values: auto, scalar, avx2, neon).
Backend active();
const char* backend_name();

// Riesz kernels are powers of the squared distance: rsq^q with q = (alpha-n)/2.
// The common exponents reduce to exact IEEE op chains; everything else goes
// through lane-wise std::pow. Classification is shared across backends so all
// of them pick the same chain.
enum class PowKind {
    recip_sqrt,     // q = -1/2:  1/sqrt(rsq)
    recip,          // q = -1:    1/rsq
    recip_3half,    // q = -3/2:  1/(rsq*sqrt(rsq))
    recip_sq,       // q = -2:    1/(rsq*rsq)
    recip_quarter,  // q = -1/4:  1/sqrt(sqrt(rsq))
    recip_3quarter, // q = -3/4:  1/(sqrt(rsq)*sqrt(sqrt(rsq)))
    general,
};
PowKind classify_exponent(double q);

// Scalar reference for one entry; used for diagonals, tails, and off-node
// kernel evaluation so every code path rounds identically.
double pow_rsq(double rsq, double q, PowKind kind);

// dot: canonical four-lane reduction of sum x[i]*y[i].
double dot(const double* x, const double* y, std::size_t n);

// y[i] += a*x[i] (elementwise, no reduction).
void axpy(double a, const double* x, double* y, std::size_t n);

// y[i] *= a.
void scal(double a, double* y, std::size_t n);

// out[j] = sum_d (coords[d][j] - p[d])^2 for j in [0, n).
void rsq_row(const double* const* coords, std::size_t dim, const double* p,
             double* out, std::size_t n);

// out[j] = (squared distance to p)^q; coincident points yield +inf because
// every chain divides by zero there, which is the kernel's singularity
// sentinel.
void riesz_row(const double* const* coords, std::size_t dim, const double* p,
               double q, double* out, std::size_t n);

} // namespace gvp::simd
