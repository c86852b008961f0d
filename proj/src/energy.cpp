#include "gvp/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "gvp/errors.hpp"
#include "gvp/geometry.hpp"
#include "gvp/simd.hpp"

namespace gvp {

namespace {

// FNV-1a over the point's doubles, with -0.0 folded onto +0.0 so the hash
// agrees with operator== on doubles.
std::uint64_t hash_point(const Point& p) {
    std::uint64_t h = 1469598103934665603ull;
    for (double v : p) {
        const double canon = v + 0.0;
        std::uint64_t bits;
        std::memcpy(&bits, &canon, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

bool points_equal(const Point& a, const Point& b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t d = 0; d < a.size(); ++d)
        if (a[d] != b[d])
            return false;
    return true;
}

} // namespace

void EnergyContext::build_lookup() {
    std::size_t cap = 16;
    while (cap < 2 * points_.size() + 1)
        cap <<= 1;
    bucket_mask_ = cap - 1;
    hash_buckets_.assign(cap, 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        std::size_t slot = hash_point(points_[i]) & bucket_mask_;
        while (hash_buckets_[slot] != 0)
            slot = (slot + 1) & bucket_mask_;
        hash_buckets_[slot] = i + 1; // 0 marks an empty bucket
    }
}

std::size_t EnergyContext::index_of(const Point& p) const {
    std::size_t slot = hash_point(p) & bucket_mask_;
    while (hash_buckets_[slot] != 0) {
        const std::size_t idx = hash_buckets_[slot] - 1;
        if (points_equal(points_[idx], p))
            return idx;
        slot = (slot + 1) & bucket_mask_;
    }
    return npos;
}

EnergyContext build_context(const KernelSpec& kernel, const Condenser& condenser,
                            double sigma, const std::vector<Point>& extra_sites) {
    kernel.check();
    const ValidationReport report = validate(condenser);
    if (!report.ok)
        throw ValidationError(report.failure, report.detail);

    EnergyContext ctx;
    ctx.condenser = condenser;
    ctx.kernel = kernel;

    // Collect the global point list, folding exact duplicates onto one index.
    ctx.points_.reserve(128);
    ctx.bucket_mask_ = 15;
    ctx.hash_buckets_.assign(16, 0);

    auto add_point = [&ctx](const Point& p) -> std::size_t {
        std::size_t slot = hash_point(p) & ctx.bucket_mask_;
        while (ctx.hash_buckets_[slot] != 0) {
            const std::size_t idx = ctx.hash_buckets_[slot] - 1;
            if (points_equal(ctx.points_[idx], p))
                return idx;
            slot = (slot + 1) & ctx.bucket_mask_;
        }
        ctx.points_.push_back(p);
        const std::size_t idx = ctx.points_.size() - 1;
        if (2 * (idx + 1) + 1 > ctx.bucket_mask_) {
            ctx.build_lookup();
        } else {
            ctx.hash_buckets_[slot] = idx + 1;
        }
        return idx;
    };

    const std::size_t dim = static_cast<std::size_t>(kernel.dim);
    auto check_dim = [dim](const Point& p, const char* what) {
        if (p.size() != dim)
            throw ValidationError("node_dim_mismatch",
                                  std::string(what) +
                                      " has wrong dimension for the kernel");
    };

    ctx.plate_index.resize(condenser.plates.size());
    for (std::size_t i = 0; i < condenser.plates.size(); ++i) {
        ctx.plate_index[i].reserve(condenser.plates[i].nodes.size());
        for (const Point& p : condenser.plates[i].nodes) {
            check_dim(p, "plate node");
            ctx.plate_index[i].push_back(add_point(p));
        }
    }
    for (const SignedAtom& atom : condenser.chi.atoms) {
        check_dim(atom.position, "chi atom");
        add_point(atom.position);
    }
    for (const Point& p : extra_sites) {
        check_dim(p, "extra site");
        add_point(p);
    }

    std::vector<double> nn;
    if (ctx.points_.size() == 1) {
        nn.assign(1, 1.0); // lone point: unit spacing stands in for a mesh size
    } else {
        nn = nearest_neighbor_distances(ctx.points_);
    }

    ctx.form = assemble_gram(kernel, ctx.points_, nn, sigma);

    ctx.chi_vec.assign(ctx.points_.size(), 0.0);
    for (const SignedAtom& atom : condenser.chi.atoms)
        ctx.chi_vec[ctx.index_of(atom.position)] += atom.weight;
    ctx.chi_energy = ctx.form.quad(ctx.chi_vec);

    return ctx;
}

std::vector<double> EnergyContext::scatter(const VectorMeasure& mu) const {
    if (mu.components.size() != condenser.plates.size())
        throw ValidationError("component_plate_mismatch",
                              "vector measure must have one component per plate");
    std::vector<double> out(points_.size(), 0.0);
    for (std::size_t i = 0; i < mu.components.size(); ++i) {
        const auto& w = mu.components[i].weights;
        if (w.size() != plate_index[i].size())
            throw ValidationError("component_plate_mismatch",
                                  "component " + std::to_string(i) +
                                      " weight count differs from node count");
        const double sign = condenser.plates[i].sign;
        for (std::size_t j = 0; j < w.size(); ++j)
            out[plate_index[i][j]] += sign * w[j];
    }
    return out;
}

std::vector<double> EnergyContext::scatter(const SignedMeasure& nu) const {
    std::vector<double> out(points_.size(), 0.0);
    for (const SignedAtom& atom : nu.atoms) {
        const std::size_t idx = index_of(atom.position);
        if (idx == npos)
            throw ValidationError("unindexed_atom",
                                  "atom position is not a context node");
        out[idx] += atom.weight;
    }
    return out;
}

double mutual_energy(const EnergyContext& ctx, const SignedMeasure& nu,
                     const SignedMeasure& nu1) {
    return ctx.form.pairing(ctx.scatter(nu), ctx.scatter(nu1));
}

double vector_energy(const EnergyContext& ctx, const VectorMeasure& mu) {
    return ctx.form.quad(ctx.scatter(mu));
}

double gauss_value(const EnergyContext& ctx, const VectorMeasure& mu) {
    const std::vector<double> s = ctx.scatter(mu);
    std::vector<double> q(s.size());
    ctx.form.matvec(s, q);
    return simd::dot(s.data(), q.data(), s.size()) +
           2.0 * simd::dot(ctx.chi_vec.data(), q.data(), s.size());
}

std::vector<double> potential_field(const EnergyContext& ctx,
                                    const VectorMeasure& mu) {
    std::vector<double> s = ctx.scatter(mu);
    for (std::size_t k = 0; k < s.size(); ++k)
        s[k] += ctx.chi_vec[k];
    std::vector<double> q(s.size());
    ctx.form.matvec(s, q);
    return q;
}

std::vector<double> weighted_potential(const EnergyContext& ctx,
                                       const VectorMeasure& mu, int plate) {
    const std::vector<double> q = potential_field(ctx, mu);
    const double sign = ctx.condenser.plates.at(plate).sign;
    const auto& idx = ctx.plate_index.at(plate);
    std::vector<double> out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        out[j] = sign * q[idx[j]];
    return out;
}

std::vector<double> weighted_potential(const EnergyContext& ctx,
                                       const VectorMeasure& mu, int plate,
                                       const std::vector<Point>& eval_points) {
    std::vector<double> s = ctx.scatter(mu);
    for (std::size_t k = 0; k < s.size(); ++k)
        s[k] += ctx.chi_vec[k];
    const double sign = ctx.condenser.plates.at(plate).sign;
    const double q_exp = ctx.kernel.exponent() / 2.0;

    std::vector<double> out(eval_points.size());
    std::vector<double> row(ctx.size());
    for (std::size_t e = 0; e < eval_points.size(); ++e) {
        const Point& x = eval_points[e];
        if (x.size() != static_cast<std::size_t>(ctx.kernel.dim))
            throw ValidationError("node_dim_mismatch",
                                  "evaluation point has wrong dimension");
        const std::size_t idx = ctx.index_of(x);
        if (idx != EnergyContext::npos) {
            out[e] = sign * simd::dot(ctx.form.row(idx), s.data(), s.size());
            continue;
        }
        simd::riesz_row(ctx.form.coord_ptrs().data(), ctx.kernel.dim, x.data(),
                        q_exp, row.data(), ctx.size());
        // Skip zero-weight sources so a coincident kernel infinity stays a
        // clean +-inf sentinel instead of inf*0.
        double acc = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (s[j] != 0.0)
                acc += s[j] * row[j];
        out[e] = sign * acc;
    }
    return out;
}

double strong_distance(const EnergyContext& ctx, const VectorMeasure& mu1,
                       const VectorMeasure& mu2) {
    const std::vector<double> s1 = ctx.scatter(mu1);
    const std::vector<double> s2 = ctx.scatter(mu2);
    std::vector<double> diff(s1.size());
    for (std::size_t k = 0; k < s1.size(); ++k)
        diff[k] = s1[k] - s2[k];
    const double val = ctx.form.quad(diff);
    if (val < 0.0) {
        const double scale = 1.0 + ctx.form.quad(s1) + ctx.form.quad(s2);
        if (val < -1e-12 * scale)
            throw Error("negative_radicand",
                        "squared distance " + std::to_string(val) +
                            " is negative beyond rounding; PD guard broken");
        return 0.0;
    }
    return std::sqrt(val);
}

} // namespace gvp
