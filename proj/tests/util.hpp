#pragma once
// Shared helpers for the test suites: seeded random tensors/grids and
// tolerance checks.

#include <cmath>
#include <cstdint>

#include "gdfusion/rng.hpp"
#include "gdfusion/tensor.hpp"

namespace testutil {

inline gdfusion::Tensor random_tensor(std::vector<std::size_t> dims, std::uint64_t seed,
                                      double lo = -1.0, double hi = 1.0) {
    gdfusion::Tensor t(std::move(dims));
    gdfusion::rng::Stream rs(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rs.uniform(lo, hi);
    return t;
}

inline gdfusion::VoxelGrid random_grid(std::size_t c, std::size_t x, std::size_t y,
                                       std::size_t z, std::uint64_t seed) {
    return gdfusion::VoxelGrid::wrap(random_tensor({c, x, y, z}, seed));
}

// Max over entries of |a - b| / (abs_tol + rel_tol * |b|); <= 1 means every
// entry is within tolerance.
inline double scaled_max_err(const gdfusion::Tensor& a, const gdfusion::Tensor& b,
                             double rel_tol, double abs_tol) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = abs_tol + rel_tol * std::fabs(b[i]);
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

inline double max_abs_diff(const gdfusion::Tensor& a, const gdfusion::Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

}  // namespace testutil
