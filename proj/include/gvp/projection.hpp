// Orthogonal projection onto the cone of nonnegative measures on a node set
// (discrete balayage), equilibrium measures, capacity, and Green energies.
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "gvp/energy.hpp"

namespace gvp {

struct ConeQpOptions {
    // Absolute slack allowed on the dual entries G w - b at exit. 0 picks
    // the caller-specific default.
    double kkt_tol = 0.0;
    // 0 means 10 * target size.
    int max_iterations = 0;
    // Optional warm start: target-local weights whose support preloads the
    // passive set.
    const std::vector<double>* warm = nullptr;
};

// Solution of min over w >= 0 of w'Gw - 2 b'w on the target block.
struct ConeQpSolution {
    std::vector<double> weights;   // target-local, all >= 0
    std::vector<double> residuals; // G_TT w - b, target-local
    int iterations = 0;
    bool converged = false;
};

// Active-set nonnegative least squares in the Gram metric. Deterministic:
// the entering variable is the most negative dual entry (ties to the lowest
// index), one blocking variable leaves per inner step (lowest index on
// ratio ties).
ConeQpSolution min_quadratic_over_cone(const EnergyForm& form,
                                       const std::vector<std::size_t>& target,
                                       const std::vector<double>& b,
                                       const ConeQpOptions& options = {});

// Persistent sweep state for solving the same cone problem against a
// sequence of right-hand sides. resolve() warm-starts from the previous
// call's active set and weights, so a small change in b costs a couple of
// pivots instead of a rebuild.
class ConeProjector {
  public:
    ConeProjector(const EnergyForm& form, std::vector<std::size_t> target,
                  double kkt_tol, int max_iterations_per_call = 0);
    ~ConeProjector();
    ConeProjector(ConeProjector&&) noexcept;
    ConeProjector& operator=(ConeProjector&&) = delete;

    // Seeds the support from a feasible weight vector (negative entries
    // ignored) so the first resolve line-steps from it. Call before the
    // first resolve only.
    void preload(const std::vector<double>& warm_weights);

    // Solves min over w >= 0 of w'Gw - 2 b'w; returns target-local weights.
    // Throws ConvergenceError on an iteration-cap hit.
    void resolve(const std::vector<double>& b);

    const std::vector<std::size_t>& target() const;
    const std::vector<double>& weights() const;       // target-local
    const std::vector<double>& residuals() const;     // G_TT w - b
    // Passive (support) members as target-local indices, entry order.
    const std::vector<int>& support() const;
    int last_iterations() const;

    // sum_t w_t * G[row][target[t]] for an arbitrary global row, using the
    // support only.
    double potential_at(std::size_t global_row) const;
    // Solves G_PP p = rhs_P for rhs gathered at the support, returning p in
    // support order. Used for line searches with the active set frozen.
    void solve_on_support(const std::vector<double>& rhs_support,
                          std::vector<double>& out) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ProjectionResult {
    DiscreteMeasure projected;           // weights on the target nodes
    double distance = 0.0;               // |nu - P nu| in the Gram metric
    std::vector<double> kkt_residuals;   // kappa(x_j, P nu - nu) per node
    double complementarity_residual = 0; // kappa(nu - P nu, P nu)
    int iterations = 0;
    double swept_mass = 0.0;             // P nu (X)
    std::optional<double> mass_bound;    // h * nu^+(X) when h is known
};

// P_F nu: the nearest point to nu in the cone of nonnegative measures on
// target_nodes (global indices). Throws ConvergenceError if the active-set
// sweep hits its iteration cap.
ProjectionResult project_onto_cone(const EnergyContext& ctx,
                                   const SignedMeasure& nu,
                                   const std::vector<std::size_t>& target_nodes,
                                   const ConeQpOptions& options = {});

// Projection onto a plate's node set; fills the mass bound field.
ProjectionResult balayage(const EnergyContext& ctx, const SignedMeasure& nu,
                          int plate, const ConeQpOptions& options = {});

struct EquilibriumResult {
    DiscreteMeasure measure;             // theta
    double capacity = 0.0;               // theta(X)
    double energy = 0.0;                 // |theta|^2
    std::vector<double> potential_at_nodes;
    int iterations = 0;
};

// theta minimizing the energy over nonnegative measures on target_nodes with
// potential >= 1 at every target node; capacity = theta(X) = |theta|^2.
EquilibriumResult equilibrium_measure(const EnergyContext& ctx,
                                      const std::vector<std::size_t>& target_nodes,
                                      const ConeQpOptions& options = {});

double capacity(const EnergyContext& ctx,
                const std::vector<std::size_t>& target_nodes);

// |nu - P_plate nu|^2; nu must have no atoms on the plate.
double green_energy(const EnergyContext& ctx, const SignedMeasure& nu,
                    int plate);

} // namespace gvp
