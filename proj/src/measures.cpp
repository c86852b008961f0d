#include "gvp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gvp {

namespace {

double squared_distance(const Point& x, const Point& y) {
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double dx = x[d] - y[d];
        s += dx * dx;
    }
    return s;
}

} // namespace

double SignedMeasure::positive_mass() const {
    double s = 0.0;
    for (const auto& atom : atoms)
        if (atom.weight > 0.0)
            s += atom.weight;
    return s;
}

double SignedMeasure::negative_mass() const {
    double s = 0.0;
    for (const auto& atom : atoms)
        if (atom.weight < 0.0)
            s -= atom.weight;
    return s;
}

double DiscreteMeasure::mass() const {
    double s = 0.0;
    for (double w : weights)
        s += w;
    return s;
}

double Condenser::g_inf() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& g : g_values)
        for (double v : g)
            m = std::min(m, v);
    return m;
}

double Condenser::g_sup() const {
    double m = 0.0;
    for (const auto& g : g_values)
        for (double v : g)
            m = std::max(m, v);
    return m;
}

ValidationReport validate(const Condenser& c) {
    auto fail = [](std::string name, std::string detail) {
        return ValidationReport{false, std::move(name), std::move(detail)};
    };

    if (c.plates.empty())
        return fail("plates_empty", "a condenser needs at least one plate");
    for (std::size_t i = 0; i < c.plates.size(); ++i) {
        if (c.plates[i].nodes.empty())
            return fail("plate_nodes_empty",
                        "plate " + std::to_string(i) + " has no nodes");
        if (c.plates[i].sign != 1 && c.plates[i].sign != -1)
            return fail("plate_sign_invalid",
                        "plate " + std::to_string(i) + " sign must be +1/-1");
    }
    if (c.a.size() != c.plates.size())
        return fail("a_size_mismatch", "one a_i per plate required");
    for (std::size_t i = 0; i < c.a.size(); ++i)
        if (!(c.a[i] > 0.0))
            return fail("a_positive_violated",
                        "a[" + std::to_string(i) + "] must be > 0");
    if (c.g_values.size() != c.plates.size())
        return fail("g_size_mismatch", "one g list per plate required");
    for (std::size_t i = 0; i < c.g_values.size(); ++i) {
        if (c.g_values[i].size() != c.plates[i].nodes.size())
            return fail("g_size_mismatch",
                        "g list length differs from node count on plate " +
                            std::to_string(i));
        for (double v : c.g_values[i])
            if (!(v > 0.0))
                return fail("g_inf_not_positive",
                            "g must be strictly positive (plate " +
                                std::to_string(i) + ")");
    }

    const double gap2 = c.min_gap * c.min_gap;
    for (std::size_t i = 0; i < c.plates.size(); ++i) {
        for (std::size_t j = i + 1; j < c.plates.size(); ++j) {
            if (c.plates[i].sign == c.plates[j].sign)
                continue;
            for (const Point& x : c.plates[i].nodes)
                for (const Point& y : c.plates[j].nodes)
                    if (squared_distance(x, y) < gap2)
                        return fail("opposite_plates_not_separated",
                                    "plates " + std::to_string(i) + " and " +
                                        std::to_string(j) +
                                        " come closer than min_gap");
        }
    }

    for (const auto& atom : c.chi.atoms) {
        if (atom.weight == 0.0)
            continue;
        const bool positive = atom.weight > 0.0;
        for (std::size_t i = 0; i < c.plates.size(); ++i) {
            const bool plate_negative = c.plates[i].sign < 0;
            if (positive != plate_negative)
                continue; // same sign as the plate, coexistence is allowed
            for (const Point& y : c.plates[i].nodes)
                if (squared_distance(atom.position, y) < gap2)
                    return fail(positive ? "chi_plus_meets_negative_plates"
                                         : "chi_minus_meets_positive_plates",
                                "chi atom too close to plate " +
                                    std::to_string(i));
        }
    }

    for (std::size_t i = 0; i < c.plates.size(); ++i) {
        if (c.plates[i].unbounded && c.plates[i].sign > 0)
            return fail("unbounded_flag_on_positive_plate",
                        "plate " + std::to_string(i) +
                            " is positive but flagged unbounded");
        if (c.plates[i].unbounded && !c.plates[i].truncation_radius)
            return fail("truncation_radius_missing",
                        "unbounded plate " + std::to_string(i) +
                            " needs a truncation radius");
    }

    return ValidationReport{};
}

SignedMeasure r_map(const Condenser& c, const VectorMeasure& mu) {
    if (mu.components.size() != c.plates.size())
        throw ValidationError("component_plate_mismatch",
                              "vector measure must have one component per plate");
    SignedMeasure out;
    for (std::size_t i = 0; i < c.plates.size(); ++i) {
        const auto& comp = mu.components[i];
        if (comp.weights.size() != c.plates[i].nodes.size())
            throw ValidationError("component_plate_mismatch",
                                  "component " + std::to_string(i) +
                                      " weight count differs from node count");
        const double sign = c.plates[i].sign;
        for (std::size_t j = 0; j < comp.weights.size(); ++j) {
            if (comp.weights[j] == 0.0)
                continue;
            // Accumulate onto an existing atom at exactly this position.
            bool merged = false;
            for (auto& atom : out.atoms) {
                if (atom.position == c.plates[i].nodes[j]) {
                    atom.weight += sign * comp.weights[j];
                    merged = true;
                    break;
                }
            }
            if (!merged)
                out.atoms.push_back(
                    {c.plates[i].nodes[j], sign * comp.weights[j]});
        }
    }
    return out;
}

double g_moment(const Condenser& c, const VectorMeasure& mu, int i) {
    const auto& g = c.g_values.at(i);
    const auto& w = mu.components.at(i).weights;
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
        s += g[j] * w[j];
    return s;
}

VectorMeasure uniform_vector_measure(const Condenser& c) {
    VectorMeasure mu;
    mu.components.resize(c.plates.size());
    for (std::size_t i = 0; i < c.plates.size(); ++i) {
        double gsum = 0.0;
        for (double v : c.g_values[i])
            gsum += v;
        mu.components[i].plate_index = static_cast<int>(i);
        mu.components[i].weights.assign(c.plates[i].nodes.size(),
                                        c.a[i] / gsum);
    }
    return mu;
}

} // namespace gvp
