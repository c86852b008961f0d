// Energies, the Gauss functional, weighted potentials, and the strong
// semimetric, all evaluated through one shared Gram matrix.
#pragma once

#include <cstddef>
#include <vector>

#include "gvp/kernel.hpp"
#include "gvp/measures.hpp"

namespace gvp {

// Global index space over every plate node, chi atom, and extra site.
// Exactly coincident points share one index, so a chi atom sitting on a
// plate node pairs with it through the regularized diagonal.
struct EnergyContext {
    EnergyForm form;
    Condenser condenser;
    KernelSpec kernel;
    std::vector<std::vector<std::size_t>> plate_index; // plate -> node -> global
    std::vector<double> chi_vec;  // signed chi weights over global indices
    double chi_energy = 0.0;      // |chi|^2 in the Gram metric

    std::size_t size() const { return form.n; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    // Global index of an exactly matching point, or npos.
    std::size_t index_of(const Point& p) const;

    // Weight vector of the R-image of mu over the global index space.
    std::vector<double> scatter(const VectorMeasure& mu) const;
    // Weight vector of a signed measure; throws if an atom is unindexed.
    std::vector<double> scatter(const SignedMeasure& nu) const;

  private:
    friend EnergyContext build_context(const KernelSpec&, const Condenser&,
                                       double, const std::vector<Point>&);
    std::vector<Point> points_;
    std::vector<std::size_t> hash_buckets_; // open-addressed point -> index
    std::size_t bucket_mask_ = 0;
    void build_lookup();
};

EnergyContext build_context(const KernelSpec& kernel, const Condenser& condenser,
                            double sigma = 0.5,
                            const std::vector<Point>& extra_sites = {});

// kappa(nu, nu1) over the shared Gram matrix.
double mutual_energy(const EnergyContext& ctx, const SignedMeasure& nu,
                     const SignedMeasure& nu1);

// |R mu|^2 = sum_{i,j} alpha_i alpha_j kappa(mu^i, mu^j).
double vector_energy(const EnergyContext& ctx, const VectorMeasure& mu);

// G_chi(mu) = |R mu|^2 + 2 kappa(chi, R mu).
double gauss_value(const EnergyContext& ctx, const VectorMeasure& mu);

// W^i_mu(x) = alpha_i kappa(x, chi + R mu) at each evaluation point.  Points
// that coincide with a global node use the Gram row (regularized diagonal);
// anything else is evaluated with the raw kernel.
std::vector<double> weighted_potential(const EnergyContext& ctx,
                                       const VectorMeasure& mu, int plate,
                                       const std::vector<Point>& eval_points);

// Same, at the plate's own nodes.
std::vector<double> weighted_potential(const EnergyContext& ctx,
                                       const VectorMeasure& mu, int plate);

// kappa(x_k, source) for every global node k; source = chi + R mu.
std::vector<double> potential_field(const EnergyContext& ctx,
                                    const VectorMeasure& mu);

// |R mu1 - R mu2| in the Gram metric.
double strong_distance(const EnergyContext& ctx, const VectorMeasure& mu1,
                       const VectorMeasure& mu2);

} // namespace gvp
