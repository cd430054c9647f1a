#pragma once

#include <span>
#include <vector>

#include "kgm/error.hpp"

namespace kgm {

/// Thomas elimination for a tridiagonal system. `lower[i]` couples row i to
/// i-1 (lower[0] unused), `upper[i]` couples row i to i+1 (last unused).
/// No pivoting: callers pass diagonally dominant M-matrices.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  require(lower.size() == n && upper.size() == n && rhs.size() == n, ErrorCode::InvalidArgument,
          "tridiagonal bands have mismatched sizes");
  std::vector<double> c(n), x(n);
  double denom = diag[0];
  require(denom != 0.0, ErrorCode::InvalidArgument, "singular tridiagonal system");
  c[0] = upper[0] / denom;
  x[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    require(denom != 0.0, ErrorCode::InvalidArgument, "singular tridiagonal system");
    c[i] = upper[i] / denom;
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace kgm
