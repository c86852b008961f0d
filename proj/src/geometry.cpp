#include "gvp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "gvp/simd.hpp"

namespace gvp {

namespace {

constexpr double kGolden = 0.6180339887498949; // frac(golden ratio)

// Portable uniform double in [0,1): top 53 bits of the engine output. Avoids
// std::uniform_real_distribution, whose exact sequence is not pinned by the
// standard.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

double ProfileSpec::radius_at(double r) const {
    return kind == Kind::power ? std::pow(r, -s) : std::exp(-std::pow(r, s));
}

double ProfileSpec::slope_at(double r) const {
    if (kind == Kind::power)
        return -s * std::pow(r, -s - 1.0);
    return -s * std::pow(r, s - 1.0) * std::exp(-std::pow(r, s));
}

const char* ProfileSpec::thinness_class() const {
    if (kind == Kind::power)
        return "not_thin";
    return s <= 1.0 ? "thin_infinite_capacity" : "thin_finite_capacity";
}

void ProfileSpec::check() const {
    if (kind == Kind::power) {
        if (!(s >= 0.0))
            throw ValidationError("profile_power_s_negative",
                                  "power profile requires s >= 0");
    } else {
        if (!(s > 0.0))
            throw ValidationError("profile_exponential_s_nonpositive",
                                  "exponential profile requires s > 0");
    }
}

int ShapeSpec::dim() const {
    switch (kind) {
    case Kind::sphere_shell:
    case Kind::ball:
        return static_cast<int>(center.size());
    case Kind::segment:
        return static_cast<int>(seg_a.size());
    case Kind::rotational_body:
        return 3;
    }
    return 0;
}

void ShapeSpec::check() const {
    if (node_count < 1)
        throw ValidationError("node_count_not_positive",
                              "node_count must be >= 1");
    switch (kind) {
    case Kind::sphere_shell:
    case Kind::ball:
        if (center.size() < 2)
            throw ValidationError("shape_dim_too_small",
                                  "center must have dimension >= 2");
        if (!(radius > 0.0))
            throw ValidationError("radius_not_positive", "radius must be > 0");
        if (kind == Kind::sphere_shell && center.size() > 3)
            throw ValidationError(
                "sphere_shell_dim_unsupported",
                "sphere_shell layouts exist for dimensions 2 and 3 only");
        break;
    case Kind::segment:
        if (seg_a.size() < 2 || seg_a.size() != seg_b.size())
            throw ValidationError("segment_endpoints_mismatch",
                                  "segment endpoints must share dimension >= 2");
        break;
    case Kind::rotational_body:
        profile.check();
        if (!(q > 0.0))
            throw ValidationError("rotational_offset_not_positive",
                                  "rotational body requires q > 0");
        if (!(truncation_radius > q))
            throw ValidationError("truncation_not_beyond_offset",
                                  "truncation_radius must exceed q");
        break;
    }
}

double rotational_lateral_area(const ProfileSpec& profile, double q,
                               double R) {
    // Simpson on a fixed even grid; the integrand rho*sqrt(1+rho'^2) is
    // smooth on [q, R].
    constexpr int kIntervals = 4096;
    const double h = (R - q) / kIntervals;
    auto f = [&](double r) {
        const double rho = profile.radius_at(r);
        const double d = profile.slope_at(r);
        return rho * std::sqrt(1.0 + d * d);
    };
    double s = f(q) + f(R);
    for (int i = 1; i < kIntervals; ++i)
        s += f(q + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

RingLayout rotational_ring_layout(const ProfileSpec& profile, double q,
                                  double truncation_radius, int node_count) {
    const int n = node_count;
    // Ring count balances axial and angular resolution while leaving room
    // for the per-ring minimum of 8 nodes.
    const int by_min = std::max(1, n / 8);
    const int by_balance =
        std::max(1, static_cast<int>(std::lround(std::sqrt(double(n)))));
    const int rings = std::min(by_min, by_balance);

    RingLayout layout;
    layout.x1.resize(rings);
    layout.counts.assign(rings, 0);
    const double step = (truncation_radius - q) / rings;
    for (int k = 0; k < rings; ++k)
        layout.x1[k] = q + (k + 0.5) * step;

    // Apportion nodes to rings proportionally to the lateral area density
    // rho*sqrt(1+rho'^2), with a floor of 8, by largest remainder.
    std::vector<double> w(rings);
    double wsum = 0.0;
    for (int k = 0; k < rings; ++k) {
        const double rho = profile.radius_at(layout.x1[k]);
        const double d = profile.slope_at(layout.x1[k]);
        w[k] = rho * std::sqrt(1.0 + d * d);
        wsum += w[k];
    }
    const int floor_each = std::min(8, n / rings);
    int remaining = n - floor_each * rings;
    std::vector<double> share(rings);
    std::vector<int> extra(rings, 0);
    int assigned = 0;
    for (int k = 0; k < rings; ++k) {
        share[k] = wsum > 0.0 ? remaining * (w[k] / wsum)
                              : double(remaining) / rings;
        extra[k] = static_cast<int>(std::floor(share[k]));
        assigned += extra[k];
    }
    std::vector<int> order(rings);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double ra = share[a] - std::floor(share[a]);
        const double rb = share[b] - std::floor(share[b]);
        if (ra != rb)
            return ra > rb;
        return a < b;
    });
    for (int i = 0; i < remaining - assigned; ++i)
        ++extra[order[i % rings]];
    for (int k = 0; k < rings; ++k)
        layout.counts[k] = floor_each + extra[k];
    return layout;
}

namespace {

std::vector<Point> sphere_shell_nodes(const ShapeSpec& shape) {
    const int n = shape.node_count;
    const int dim = shape.dim();
    std::vector<Point> pts;
    pts.reserve(n);
    if (dim == 2) {
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * M_PI * i / n;
            pts.push_back({shape.center[0] + shape.radius * std::cos(t),
                           shape.center[1] + shape.radius * std::sin(t)});
        }
        return pts;
    }
    // Fibonacci spiral: z strata at odd midpoints, azimuth advancing by the
    // golden angle. Quasi-uniform and free of randomness.
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double t = 2.0 * M_PI * std::fmod(i * kGolden, 1.0);
        pts.push_back({shape.center[0] + shape.radius * r * std::cos(t),
                       shape.center[1] + shape.radius * r * std::sin(t),
                       shape.center[2] + shape.radius * z});
    }
    return pts;
}

std::vector<Point> ball_nodes(const ShapeSpec& shape) {
    const int n = shape.node_count;
    const int dim = shape.dim();
    std::vector<Point> pts;
    pts.reserve(n);
    std::mt19937_64 rng(shape.seed);
    const double r2 = shape.radius * shape.radius;
    while (static_cast<int>(pts.size()) < n) {
        Point p(dim);
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double u = (2.0 * uniform01(rng) - 1.0) * shape.radius;
            p[d] = u;
            s += u * u;
        }
        if (s > r2)
            continue;
        for (int d = 0; d < dim; ++d)
            p[d] += shape.center[d];
        pts.push_back(std::move(p));
    }
    return pts;
}

std::vector<Point> segment_nodes(const ShapeSpec& shape) {
    const int n = shape.node_count;
    const int dim = shape.dim();
    std::vector<Point> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = (n == 1) ? 0.5 : double(i) / (n - 1);
        Point p(dim);
        for (int d = 0; d < dim; ++d)
            p[d] = shape.seg_a[d] + t * (shape.seg_b[d] - shape.seg_a[d]);
        pts.push_back(std::move(p));
    }
    return pts;
}

std::vector<Point> rotational_nodes(const ShapeSpec& shape) {
    const RingLayout layout = rotational_ring_layout(
        shape.profile, shape.q, shape.truncation_radius, shape.node_count);
    std::vector<Point> pts;
    pts.reserve(shape.node_count);
    for (std::size_t k = 0; k < layout.x1.size(); ++k) {
        const double x1 = layout.x1[k];
        const double rho = shape.profile.radius_at(x1);
        const int m = layout.counts[k];
        // Golden offset decorrelates azimuths of consecutive rings.
        const double off = std::fmod((k + 1) * kGolden, 1.0);
        for (int j = 0; j < m; ++j) {
            const double t = 2.0 * M_PI * (j + off) / m;
            pts.push_back({x1, rho * std::cos(t), rho * std::sin(t)});
        }
    }
    return pts;
}

} // namespace

std::vector<Point> generate_nodes(const ShapeSpec& shape) {
    shape.check();
    switch (shape.kind) {
    case ShapeSpec::Kind::sphere_shell:
        return sphere_shell_nodes(shape);
    case ShapeSpec::Kind::ball:
        return ball_nodes(shape);
    case ShapeSpec::Kind::segment:
        return segment_nodes(shape);
    case ShapeSpec::Kind::rotational_body:
        return rotational_nodes(shape);
    }
    throw ValidationError("shape_unknown", "unhandled shape kind");
}

std::vector<double>
nearest_neighbor_distances(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    if (n < 2)
        throw ValidationError("too_few_points",
                              "nearest-neighbor distances need >= 2 points");
    const std::size_t dim = points[0].size();
    for (const Point& p : points)
        if (p.size() != dim)
            throw ValidationError("point_dim_mismatch",
                                  "points must share one dimension");

    // Structure-of-arrays copy so the distance rows vectorize.
    std::vector<double> soa(dim * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d)
            soa[d * n + i] = points[i][d];
    std::vector<const double*> cols(dim);
    for (std::size_t d = 0; d < dim; ++d)
        cols[d] = soa.data() + d * n;

    std::vector<double> out(n);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        simd::rsq_row(cols.data(), dim, points[i].data(), row.data(), n);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            if (row[j] < best) {
                best = row[j];
                best_j = j;
            }
        }
        if (best == 0.0)
            throw ValidationError("duplicate_points",
                                  "coincident points at indices " +
                                      std::to_string(i) + " and " +
                                      std::to_string(best_j));
        out[i] = std::sqrt(best);
    }
    return out;
}

} // namespace gvp
