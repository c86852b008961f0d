// Discrete measures on a condenser: plates with signs, the external measure
// chi, nonnegative component measures, the R-map and g-moments, and the
// standing-assumption validation.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gvp/geometry.hpp"

namespace gvp {

struct Plate {
    std::vector<Point> nodes;
    int sign = 1; // +1 or -1
    ShapeSpec shape;
    bool unbounded = false;
    std::optional<double> truncation_radius;
};

struct SignedAtom {
    Point position;
    double weight = 0.0;
};

// Finite atomic signed measure. The Hahn-Jordan parts are derived views:
// positive weights form nu+, magnitudes of negative weights form nu-.
struct SignedMeasure {
    std::vector<SignedAtom> atoms;

    double positive_mass() const;
    double negative_mass() const;
    double total_variation() const { return positive_mass() + negative_mass(); }
};

// Nonnegative weights aligned with one plate's node list; plate_index = -1
// marks a free measure (chi-like, not attached to a plate).
struct DiscreteMeasure {
    int plate_index = -1;
    std::vector<double> weights;

    double mass() const;
};

struct VectorMeasure {
    std::vector<DiscreteMeasure> components; // one per plate, same order
};

struct Condenser {
    std::vector<Plate> plates;
    SignedMeasure chi;
    std::vector<double> a;                    // per-plate moment targets
    std::vector<std::vector<double>> g_values; // per-plate, per-node
    double min_gap = 1e-6;
    bool g_bounded_asserted = true;

    double g_inf() const;
    double g_sup() const;
};

struct ValidationReport {
    bool ok = true;
    std::string failure; // first violated condition, empty when ok
    std::string detail;
};

// Checks the standing assumptions in a fixed order and reports the first
// violation: nonempty plates and nodes, sizes of a and g, a_i > 0, g > 0,
// separation of oppositely signed plates, chi+ off negative plates and chi-
// off positive plates, unbounded flags only on negative plates.
ValidationReport validate(const Condenser& condenser);

// R(mu) = sum_i sign_i * mu^i as a signed atomic measure; atoms at nodes
// shared by equally signed plates accumulate.
SignedMeasure r_map(const Condenser& condenser, const VectorMeasure& mu);

// <g, mu^i> = sum_j g_i(x_j) * w_j.
double g_moment(const Condenser& condenser, const VectorMeasure& mu, int i);

// Uniform feasible start: w_j = a_i / sum_k g_k on every plate.
VectorMeasure uniform_vector_measure(const Condenser& condenser);

} // namespace gvp
