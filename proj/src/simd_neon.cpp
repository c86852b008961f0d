// NEON backend. AArch64 NEON is two-lane for doubles, so a batch is a pair of
// float64x2_t covering the four canonical lanes. vaddq/vsubq/vmulq/vdivq/
// vsqrtq round correctly per lane; no fused multiply-add is emitted.
#if defined(__aarch64__)

#include <arm_neon.h>

#include "simd_common.hpp"

namespace gvp::simd::detail {

namespace {

struct NeonBatch {
    float64x2_t lo, hi;

    static NeonBatch load(const double* p) {
        return {vld1q_f64(p), vld1q_f64(p + 2)};
    }
    static void store(double* p, NeonBatch b) {
        vst1q_f64(p, b.lo);
        vst1q_f64(p + 2, b.hi);
    }
    static NeonBatch broadcast(double x) {
        return {vdupq_n_f64(x), vdupq_n_f64(x)};
    }
    static NeonBatch add(NeonBatch a, NeonBatch b) {
        return {vaddq_f64(a.lo, b.lo), vaddq_f64(a.hi, b.hi)};
    }
    static NeonBatch sub(NeonBatch a, NeonBatch b) {
        return {vsubq_f64(a.lo, b.lo), vsubq_f64(a.hi, b.hi)};
    }
    static NeonBatch mul(NeonBatch a, NeonBatch b) {
        return {vmulq_f64(a.lo, b.lo), vmulq_f64(a.hi, b.hi)};
    }
    static NeonBatch div(NeonBatch a, NeonBatch b) {
        return {vdivq_f64(a.lo, b.lo), vdivq_f64(a.hi, b.hi)};
    }
    static NeonBatch sqrt(NeonBatch a) {
        return {vsqrtq_f64(a.lo), vsqrtq_f64(a.hi)};
    }
};

} // namespace

const Ops neon_ops = make_ops<NeonBatch>();

} // namespace gvp::simd::detail

#endif
