#include "gvp/linalg.hpp"

#include <cassert>
#include <cmath>
#include <cstring>

#include "gvp/simd.hpp"

namespace gvp {

bool cholesky_factor(const double* a, std::size_t n,
                     std::vector<double>& lower) {
    lower.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* lj = lower.data() + j * n;
        double d = a[j * n + j] - simd::dot(lj, lj, j);
        if (!(d > 0.0))
            return false;
        const double ljj = std::sqrt(d);
        lower[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double* li = lower.data() + i * n;
            li[j] = (a[i * n + j] - simd::dot(li, lj, j)) / ljj;
        }
    }
    return true;
}

void solve_lower(const double* lower, std::size_t n, std::size_t ld,
                 double* x) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* li = lower + i * ld;
        x[i] = (x[i] - simd::dot(li, x, i)) / li[i];
    }
}

void solve_lower_transposed(const double* lower, std::size_t n, std::size_t ld,
                            double* x) {
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
            s -= lower[j * ld + ii] * x[j];
        x[ii] = s / lower[ii * ld + ii];
    }
}

ActiveSetFactor::ActiveSetFactor(std::size_t capacity)
    : cap_(capacity), l_(capacity * capacity, 0.0), work_(capacity, 0.0) {}

bool ActiveSetFactor::append(const double* column, double diagonal) {
    assert(k_ < cap_);
    double* row = l_.data() + k_ * cap_;
    std::memcpy(row, column, k_ * sizeof(double));
    solve_lower(l_.data(), k_, cap_, row);
    double d = diagonal - simd::dot(row, row, k_);
    if (!(d > 0.0))
        return false;
    row[k_] = std::sqrt(d);
    ++k_;
    return true;
}

void ActiveSetFactor::remove(std::size_t position) {
    assert(position < k_);
    // Shift the rows below the deleted one up, keeping every column: the
    // deleted member's column still carries energy that the rotations below
    // fold back into the remaining columns. The trailing block is then upper
    // Hessenberg (one entry right of each diagonal).
    for (std::size_t r = position; r + 1 < k_; ++r) {
        double* dst = l_.data() + r * cap_;
        const double* src = l_.data() + (r + 1) * cap_;
        std::memcpy(dst, src, (r + 2) * sizeof(double));
    }
    --k_;
    // Givens rotations on column pairs (r, r+1) zero the superdiagonal one
    // row at a time; the product L L^T is invariant under them.
    for (std::size_t r = position; r < k_; ++r) {
        const double a = l_[r * cap_ + r];
        const double b = l_[r * cap_ + r + 1];
        if (b == 0.0) {
            if (a < 0.0) {
                for (std::size_t i = r; i < k_; ++i)
                    l_[i * cap_ + r] = -l_[i * cap_ + r];
            }
            continue;
        }
        const double h = std::hypot(a, b);
        const double c = a / h;
        const double s = b / h;
        for (std::size_t i = r; i < k_; ++i) {
            double* li = l_.data() + i * cap_;
            const double u = li[r];
            const double v = li[r + 1];
            li[r] = c * u + s * v;
            li[r + 1] = c * v - s * u;
        }
        l_[r * cap_ + r + 1] = 0.0;
    }
}

void ActiveSetFactor::solve(const double* b, double* x) const {
    std::memcpy(x, b, k_ * sizeof(double));
    solve_lower(l_.data(), k_, cap_, x);
    solve_lower_transposed(l_.data(), k_, cap_, x);
}

} // namespace gvp
