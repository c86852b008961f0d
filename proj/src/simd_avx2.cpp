// AVX2 backend. One __m256d is exactly the four canonical lanes; vaddpd,
// vsubpd, vmulpd, vdivpd and vsqrtpd are correctly rounded per lane, so this
// matches the scalar reference bitwise. No FMA is used anywhere.
#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include "simd_common.hpp"

namespace gvp::simd::detail {

namespace {

struct Avx2Batch {
    __m256d v;

    static Avx2Batch load(const double* p) { return {_mm256_loadu_pd(p)}; }
    static void store(double* p, Avx2Batch b) { _mm256_storeu_pd(p, b.v); }
    static Avx2Batch broadcast(double x) { return {_mm256_set1_pd(x)}; }
    static Avx2Batch add(Avx2Batch a, Avx2Batch b) {
        return {_mm256_add_pd(a.v, b.v)};
    }
    static Avx2Batch sub(Avx2Batch a, Avx2Batch b) {
        return {_mm256_sub_pd(a.v, b.v)};
    }
    static Avx2Batch mul(Avx2Batch a, Avx2Batch b) {
        return {_mm256_mul_pd(a.v, b.v)};
    }
    static Avx2Batch div(Avx2Batch a, Avx2Batch b) {
        return {_mm256_div_pd(a.v, b.v)};
    }
    static Avx2Batch sqrt(Avx2Batch a) { return {_mm256_sqrt_pd(a.v)}; }
};

} // namespace

const Ops avx2_ops = make_ops<Avx2Batch>();

} // namespace gvp::simd::detail

#endif
