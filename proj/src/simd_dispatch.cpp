// Backend selection and the public dispatch surface, plus the fork-join
// helper. Selection happens once: GVP_SIMD may force a backend, otherwise the
// best one the CPU supports wins.
#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "gvp/errors.hpp"
#include "gvp/parallel.hpp"
#include "gvp/simd.hpp"
#include "simd_common.hpp"

namespace gvp::simd {

namespace {

struct Selection {
    Backend backend;
    const detail::Ops* ops;
};

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Selection select() {
    const char* env = std::getenv("GVP_SIMD");
    std::string want = env ? env : "auto";
    if (want == "scalar")
        return {Backend::scalar, &detail::scalar_ops};
    if (want == "avx2") {
#if GVP_HAVE_AVX2_TU
        if (cpu_has_avx2())
            return {Backend::avx2, &detail::avx2_ops};
#endif
        throw ValidationError("simd_backend_unsupported",
                              "GVP_SIMD=avx2 but this CPU or build lacks AVX2");
    }
    if (want == "neon") {
#if GVP_HAVE_NEON_TU
        return {Backend::neon, &detail::neon_ops};
#else
        throw ValidationError("simd_backend_unsupported",
                              "GVP_SIMD=neon but this build lacks NEON");
#endif
    }
    if (want != "auto")
        throw ValidationError("simd_backend_unknown",
                              "GVP_SIMD must be auto, scalar, avx2 or neon");
#if GVP_HAVE_AVX2_TU
    if (cpu_has_avx2())
        return {Backend::avx2, &detail::avx2_ops};
#endif
#if GVP_HAVE_NEON_TU
    return {Backend::neon, &detail::neon_ops};
#endif
    return {Backend::scalar, &detail::scalar_ops};
}

const Selection& selection() {
    static const Selection s = select();
    return s;
}

} // namespace

Backend active() { return selection().backend; }

const char* backend_name() {
    switch (selection().backend) {
    case Backend::scalar:
        return "scalar";
    case Backend::avx2:
        return "avx2";
    case Backend::neon:
        return "neon";
    }
    return "scalar";
}

PowKind classify_exponent(double q) {
    if (q == -0.5)
        return PowKind::recip_sqrt;
    if (q == -1.0)
        return PowKind::recip;
    if (q == -1.5)
        return PowKind::recip_3half;
    if (q == -2.0)
        return PowKind::recip_sq;
    if (q == -0.25)
        return PowKind::recip_quarter;
    if (q == -0.75)
        return PowKind::recip_3quarter;
    return PowKind::general;
}

double pow_rsq(double rsq, double q, PowKind kind) {
    return detail::pow_rsq_ref(rsq, q, kind);
}

double dot(const double* x, const double* y, std::size_t n) {
    return selection().ops->dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    selection().ops->axpy(a, x, y, n);
}

void scal(double a, double* y, std::size_t n) {
    selection().ops->scal(a, y, n);
}

void rsq_row(const double* const* coords, std::size_t dim, const double* p,
             double* out, std::size_t n) {
    selection().ops->rsq_row(coords, dim, p, out, n);
}

void riesz_row(const double* const* coords, std::size_t dim, const double* p,
               double q, double* out, std::size_t n) {
    selection().ops->riesz_row(coords, dim, p, q, out, n);
}

} // namespace gvp::simd

namespace gvp {

int thread_count() {
    const char* env = std::getenv("GVP_THREADS");
    long want = 0;
    if (env && *env)
        want = std::strtol(env, nullptr, 10);
    if (want <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        want = hw ? static_cast<long>(hw) : 1;
    }
    return static_cast<int>(want);
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0)
        return;
    const std::size_t threads =
        std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
    if (threads <= 1) {
        body(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    const std::size_t chunk = (count + threads - 1) / threads;
    std::size_t lo = begin;
    for (std::size_t t = 0; t + 1 < threads && lo < end; ++t) {
        std::size_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
        lo = hi;
    }
    if (lo < end)
        body(lo, end);
    for (auto& th : pool)
        th.join();
}

} // namespace gvp
