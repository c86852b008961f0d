// Reference backend: four explicit lanes in plain doubles. The optimizer may
// vectorize these loops, but strict IEEE semantics (contraction disabled
// project-wide) keep the values identical to the hand-written SIMD backends.
#include "simd_common.hpp"

namespace gvp::simd::detail {

namespace {

struct ScalarBatch {
    double v[4];

    static ScalarBatch load(const double* p) {
        return {{p[0], p[1], p[2], p[3]}};
    }
    static void store(double* p, ScalarBatch b) {
        p[0] = b.v[0];
        p[1] = b.v[1];
        p[2] = b.v[2];
        p[3] = b.v[3];
    }
    static ScalarBatch broadcast(double x) { return {{x, x, x, x}}; }
    static ScalarBatch add(ScalarBatch a, ScalarBatch b) {
        return {{a.v[0] + b.v[0], a.v[1] + b.v[1], a.v[2] + b.v[2],
                 a.v[3] + b.v[3]}};
    }
    static ScalarBatch sub(ScalarBatch a, ScalarBatch b) {
        return {{a.v[0] - b.v[0], a.v[1] - b.v[1], a.v[2] - b.v[2],
                 a.v[3] - b.v[3]}};
    }
    static ScalarBatch mul(ScalarBatch a, ScalarBatch b) {
        return {{a.v[0] * b.v[0], a.v[1] * b.v[1], a.v[2] * b.v[2],
                 a.v[3] * b.v[3]}};
    }
    static ScalarBatch div(ScalarBatch a, ScalarBatch b) {
        return {{a.v[0] / b.v[0], a.v[1] / b.v[1], a.v[2] / b.v[2],
                 a.v[3] / b.v[3]}};
    }
    static ScalarBatch sqrt(ScalarBatch a) {
        return {{std::sqrt(a.v[0]), std::sqrt(a.v[1]), std::sqrt(a.v[2]),
                 std::sqrt(a.v[3])}};
    }
};

} // namespace

const Ops scalar_ops = make_ops<ScalarBatch>();

} // namespace gvp::simd::detail
