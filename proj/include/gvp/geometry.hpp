// Deterministic point-cloud discretizations of the supported plate shapes,
// plus nearest-neighbor spacing (which feeds the Gram diagonal rule).
#pragma once

#include <cstdint>
#include <vector>

#include "gvp/errors.hpp"

namespace gvp {

using Point = std::vector<double>;

struct ProfileSpec {
    enum class Kind { power, exponential };
    Kind kind = Kind::power;
    double s = 1.0;

    // rho(r) = r^(-s) or exp(-r^s).
    double radius_at(double r) const;
    double slope_at(double r) const;

    // The exponential profile with s in (0,1] is thin at infinity yet has
    // infinite capacity; s > 1 has finite capacity; power profiles are not
    // thin. Scenario metadata only, never computed.
    const char* thinness_class() const;

    void check() const; // throws ValidationError
};

struct ShapeSpec {
    enum class Kind { sphere_shell, ball, segment, rotational_body };
    Kind kind = Kind::sphere_shell;

    Point center;          // sphere_shell, ball
    double radius = 0.0;   // sphere_shell, ball
    Point seg_a, seg_b;    // segment endpoints
    double q = 0.0;        // rotational_body axis offset
    double truncation_radius = 0.0; // rotational_body extent
    ProfileSpec profile;   // rotational_body lateral profile

    int node_count = 0;
    std::uint64_t seed = 0;

    int dim() const;
    void check() const; // throws ValidationError
};

// Pure function of (shape, seed). Sphere shells use a Fibonacci spiral (3D)
// or uniform angles (2D); balls use seeded rejection sampling; segments are
// uniform; rotational bodies place rings uniformly in x1 with per-ring counts
// apportioned to the lateral area density.
std::vector<Point> generate_nodes(const ShapeSpec& shape);

// d_i = min_{j != i} |x_i - x_j|. Throws ValidationError naming the first
// coincident index pair if any distance is zero.
std::vector<double> nearest_neighbor_distances(const std::vector<Point>& points);

// Ring layout shared by generate_nodes and the truncation schedule: node
// counts per ring, proportional to rho*sqrt(1+rho'^2) at the ring abscissa,
// at least 8 per ring, apportioned by largest remainder.
struct RingLayout {
    std::vector<double> x1;     // ring abscissas
    std::vector<int> counts;    // nodes per ring
};
RingLayout rotational_ring_layout(const ProfileSpec& profile, double q,
                                  double truncation_radius, int node_count);

// Lateral surface area of the rotational body between q and R (up to the
// constant 2*pi), by composite Simpson quadrature on a fixed grid.
double rotational_lateral_area(const ProfileSpec& profile, double q, double R);

} // namespace gvp
