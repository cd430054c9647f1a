#pragma once

// The reduction map u -> phi_u: for a fixed matter field the electrostatic
// equation  -Laplace(phi) + e^2 u^2 phi = e omega u^2  is linear in phi and is
// solved directly on the radial grid.
//
// The discrete operator is the stationarity condition in phi of the discrete
// two-field action, so the weak-form identity
//   int |grad phi|^2 + e^2 u^2 phi^2 = e omega int u^2 phi
// holds to rounding and the reduced gradient in energy.hpp is exact.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgm/error.hpp"
#include "kgm/model.hpp"
#include "kgm/tridiagonal.hpp"

namespace kgm {

struct PhiSolution {
  Field phi;
  double linear_residual = 0.0;  ///< max |A phi - b| / max(|b|, tiny)
  double identity_gap = 0.0;
};

/// Dirichlet form of the potential including the exterior Coulomb tail:
/// outside the ball phi = phi(R) R / r contributes 4 pi R phi(R)^2.
inline double potential_dirichlet_form(const RadialGrid& grid, std::span<const double> phi) {
  double d = dirichlet_form(grid, phi);
  if (grid.potential_boundary() == PotentialBoundary::coulomb) {
    const double last = phi[grid.n() - 1];
    d += 4.0 * pi * grid.r_max() * last * last;
  }
  return d;
}

inline double electrostatic_identity_gap(const Field& u, const Field& phi,
                                         const ModelParams& params) {
  require_same_grid(u, phi);
  const auto w = u.grid->weights();
  const double e = params.e, omega = params.omega;
  double coupling = 0.0, source = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double u2 = u[i] * u[i];
    coupling += w[i] * e * e * u2 * phi[i] * phi[i];
    source += w[i] * e * omega * u2 * phi[i];
  }
  const double lhs = potential_dirichlet_form(*u.grid, phi.values) + coupling;
  return std::abs(lhs - source) / std::max(1.0, source);
}

inline PhiSolution solve_phi(const Field& u, const ModelParams& params) {
  require(u.grid != nullptr, ErrorCode::InvalidArgument, "field has no grid");
  require(u.all_finite(), ErrorCode::NonFiniteInput, "matter field is not finite");
  params.validate();

  const RadialGrid& grid = *u.grid;
  const int n = grid.n();
  const auto w = grid.weights();
  const auto a = grid.face_areas();
  const double h = grid.h();
  const double e = params.e, omega = params.omega;
  const bool coulomb = grid.potential_boundary() == PotentialBoundary::coulomb;
  // Dirichlet pins the last node, leaving n-1 unknowns.
  const int m = coulomb ? n : n - 1;

  std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double u2 = u[i] * u[i];
    diag[i] = w[i] * e * e * u2;
    rhs[i] = w[i] * e * omega * u2;
    if (i > 0) {
      const double k = a[i - 1] / h;
      diag[i] += k;
      lower[i] = -k;
    }
    if (i + 1 < n) {
      const double k = a[i] / h;
      diag[i] += k;
      if (i + 1 < m) upper[i] = -k;
    }
  }
  if (coulomb) diag[n - 1] += 4.0 * pi * grid.r_max();

  std::vector<double> x = solve_tridiagonal(lower, diag, upper, rhs);

  PhiSolution out;
  out.phi = Field(u.grid);
  std::copy(x.begin(), x.end(), out.phi.values.begin());

  double res = 0.0, scale = 0.0;
  for (int i = 0; i < m; ++i) {
    double ax = diag[i] * x[i];
    if (i > 0) ax += lower[i] * x[i - 1];
    if (i + 1 < m) ax += upper[i] * x[i + 1];
    res = std::max(res, std::abs(ax - rhs[i]));
    scale = std::max(scale, std::abs(rhs[i]));
  }
  out.linear_residual = scale > 0.0 ? res / scale : res;

  const double bound = params.phi_bound();
  constexpr double tol = 1e-10;
  for (int i = 0; i < n; ++i) {
    const double v = out.phi[i];
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "potential solve produced non-finite values");
    require(v >= -tol && v <= bound + tol, ErrorCode::BoundsViolated,
            "potential leaves [0, omega/e] at node " + std::to_string(i) +
                " (phi=" + std::to_string(v) + ")");
  }
  out.identity_gap = electrostatic_identity_gap(u, out.phi, params);
  return out;
}

}  // namespace kgm
