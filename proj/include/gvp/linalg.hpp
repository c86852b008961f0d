// Small dense linear algebra in the energy metric: one-shot Cholesky for the
// positive-definiteness guard and an incrementally updated Cholesky factor
// for active-set iterations (column appends, Givens-based deletions). All
// inner products go through the canonical SIMD reduction so factorizations
// are reproducible across backends and runs.
#pragma once

#include <cstddef>
#include <vector>

namespace gvp {

// Attempts L*L^T = A for row-major symmetric A (reads the lower triangle).
// Returns false on a nonpositive pivot; on success `lower` holds L row-major.
bool cholesky_factor(const double* a, std::size_t n, std::vector<double>& lower);

// In-place solves with a row-major lower factor of leading dimension `ld`.
void solve_lower(const double* lower, std::size_t n, std::size_t ld, double* x);
void solve_lower_transposed(const double* lower, std::size_t n, std::size_t ld,
                            double* x);

// Cholesky factor of a principal submatrix that grows and shrinks one index
// at a time, kept in insertion order. append() receives the new column of the
// matrix restricted to the current members plus the new diagonal entry;
// remove() deletes the member at a given position and re-triangularizes the
// trailing block with Givens rotations.
class ActiveSetFactor {
public:
    explicit ActiveSetFactor(std::size_t capacity);

    std::size_t size() const { return k_; }

    // Returns false (and leaves the factor unchanged) if the Schur complement
    // pivot is not positive, which signals numerical semidefiniteness.
    bool append(const double* column, double diagonal);

    void remove(std::size_t position);

    // x = (L L^T)^{-1} b for the current members, in insertion order.
    void solve(const double* b, double* x) const;

    void clear() { k_ = 0; }

private:
    std::size_t cap_;
    std::size_t k_ = 0;
    std::vector<double> l_; // row-major, stride cap_
    std::vector<double> work_;
};

} // namespace gvp
