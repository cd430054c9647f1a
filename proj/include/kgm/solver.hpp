#pragma once

// Critical points of the reduced functionals.
//
// Both methods step along Sobolev gradients: the nodal gradient g is mapped to
// G solving  (-Laplace + a(r)) G = g  with a = mass + 2 e omega phi - e^2 phi^2
// (nonnegative because 0 <= e phi <= omega), i.e. steepest descent in a
// weighted H^1 inner product. The last node stays pinned at zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "kgm/energy.hpp"
#include "kgm/error.hpp"
#include "kgm/model.hpp"
#include "kgm/tridiagonal.hpp"

namespace kgm {

enum class Method { mountain_pass, nehari_descent };

inline std::string_view to_string(Method m) {
  return m == Method::mountain_pass ? "mountain_pass" : "nehari_descent";
}

struct StepRule {
  double initial = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

struct GaussianSeed {
  double amplitude = 2.0;
  double width = 2.0;
};

using SeedProfile = std::variant<GaussianSeed, Field>;

struct SolverOptions {
  Method method = Method::mountain_pass;
  int max_iters = 3000;
  double grad_tol = 1e-6;
  StepRule step;
  int path_points = 16;
  SeedProfile seed = GaussianSeed{};
  /// Lower end of the lambda range; the path endpoint must have negative
  /// energy at lambda = min(lambda, delta), hence for every larger lambda.
  double delta = 0.5;

  void validate() const {
    require(grad_tol > 0.0, ErrorCode::InvalidArgument, "grad_tol must be > 0");
    require(path_points >= 8, ErrorCode::InvalidArgument, "path_points must be >= 8");
    require(max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
    require(step.initial > 0.0 && step.shrink > 0.0 && step.shrink < 1.0,
            ErrorCode::InvalidArgument, "invalid backtracking parameters");
    require(delta > 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "delta must be in (0,1]");
  }
};

struct SolutionReport {
  Field u;
  Field phi;
  EnergyBreakdown energy;
  IdentityResiduals residuals;
  FieldNorms norms_u;
  FieldNorms norms_phi;
  double electrostatic_gap = 0.0;
  double phi_linear_residual = 0.0;
  double phi_max = 0.0;
  double fprime_mass = 0.0;  ///< int f'(u) u
  int iterations = 0;
  double level_estimate = 0.0;
  bool converged = false;
  Method method = Method::mountain_pass;
  std::string mode;
};

/// Nehari tolerance of a converged report.
inline constexpr double kNehariAcceptance = 1e-4;
/// Lower bound on ||u||_p below which an iterate is considered collapsed.
inline constexpr double kCollapseThreshold = 1e-8;

inline SolutionReport make_report(const Field& u, const ModelParams& params, const Mode& mode,
                                  int iterations, double grad_tol, Method method) {
  const Evaluation ev = evaluate(u, params, mode, true);
  SolutionReport r;
  r.u = u;
  r.phi = ev.phi.phi;
  r.energy = ev.energy;
  r.residuals = identity_residuals(ev, params, mode);
  r.norms_u = field_norms(u, params.nonlinearity.p());
  r.norms_phi = field_norms(ev.phi.phi, 2.0);
  r.norms_phi.d12 = std::sqrt(potential_dirichlet_form(*u.grid, ev.phi.phi.values));
  r.norms_phi.h1 = std::hypot(r.norms_phi.d12, r.norms_phi.l2);
  r.electrostatic_gap = ev.phi.identity_gap;
  r.phi_linear_residual = ev.phi.linear_residual;
  r.phi_max = *std::max_element(r.phi.values.begin(), r.phi.values.end());
  r.fprime_mass = ev.terms.fprime_u;
  r.iterations = iterations;
  r.level_estimate = ev.energy.total;
  r.method = method;
  r.mode = mode.describe();
  r.converged = !u.is_zero() && r.residuals.gradient_norm <= grad_tol &&
                r.residuals.nehari <= kNehariAcceptance;
  return r;
}

namespace detail {

inline Field seed_field(const GridPtr& grid, const SeedProfile& seed) {
  if (const auto* g = std::get_if<GaussianSeed>(&seed)) {
    require(g->amplitude != 0.0 && g->width > 0.0, ErrorCode::InvalidArgument,
            "gaussian seed needs nonzero amplitude and positive width");
    Field f = sample(grid, [&](double r) { return g->amplitude * std::exp(-(r * r) / (g->width * g->width)); });
    f[f.size() - 1] = 0.0;
    return f;
  }
  Field f = std::get<Field>(seed);
  require(f.grid && f.grid->same_as(*grid), ErrorCode::InvalidArgument,
          "custom seed lives on a different grid");
  require(!f.is_zero() && f.all_finite(), ErrorCode::InvalidArgument,
          "custom seed must be finite and nonzero");
  f[f.size() - 1] = 0.0;
  return f;
}

/// Riesz representative of the gradient in the weighted H^1 inner product.
inline Field sobolev_gradient(const Field& gradient, const Field& phi, const ModelParams& params,
                              const Mode& mode) {
  const RadialGrid& grid = *gradient.grid;
  const int n = grid.n();
  const int m = n - 1;
  const auto w = grid.weights();
  const auto a = grid.face_areas();
  const double h = grid.h();
  const double e = params.e, omega = params.omega, mass = mode.mass(params);
  std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double pot = std::max(0.0, mass + 2.0 * e * omega * phi[i] - e * e * phi[i] * phi[i]);
    diag[i] = w[i] * pot + a[i] / h;
    if (i > 0) {
      diag[i] += a[i - 1] / h;
      lower[i] = -a[i - 1] / h;
    }
    if (i + 1 < m) upper[i] = -a[i] / h;
    rhs[i] = w[i] * gradient[i];
  }
  const auto x = solve_tridiagonal(lower, diag, upper, rhs);
  Field out(gradient.grid);
  std::copy(x.begin(), x.end(), out.values.begin());
  return out;
}

/// |v|^2 in the inner product used by sobolev_gradient.
inline double metric_norm2(const Field& v, const Field& phi, const ModelParams& params,
                           const Mode& mode) {
  const auto w = v.grid->weights();
  const double e = params.e, omega = params.omega, mass = mode.mass(params);
  double s = dirichlet_form(*v.grid, v.values);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double pot = std::max(0.0, mass + 2.0 * e * omega * phi[i] - e * e * phi[i] * phi[i]);
    s += w[i] * pot * v[i] * v[i];
  }
  return s;
}

inline double lp_norm(const Field& u, double p) { return field_norms(u, p).lp; }

/// Rounding level of an energy evaluation; sufficient-decrease tests below
/// this level compare noise.
inline double energy_noise(const EnergyBreakdown& e) {
  return 256.0 * std::numeric_limits<double>::epsilon() *
         (std::abs(e.kinetic) + std::abs(e.mass_term) + std::abs(e.interaction) +
          std::abs(e.potential));
}

inline void check_collapse(const Field& u, const ModelParams& params) {
  require(lp_norm(u, params.nonlinearity.p()) >= kCollapseThreshold, ErrorCode::CollapseToZero,
          "iterate collapsed to the trivial solution");
}

/// Signed Nehari functional <I'(v), v>.
inline double nehari_signed(const Field& v, const ModelParams& params, const Mode& mode) {
  const auto ev = evaluate(v, params, mode, false);
  const auto& t = ev.terms;
  const double e = params.e, omega = params.omega;
  return t.grad2 + mode.mass(params) * t.mass2 + 2.0 * e * omega * t.phi_u2 - e * e * t.phi2_u2 -
         mode.lambda() * t.fprime_u;
}

/// Scales the endpoint until the energy is negative at the smallest lambda
/// the path has to serve.
inline Field path_endpoint(Field seed, const ModelParams& params, const Mode& mode, double delta) {
  const Mode check_mode = mode.is_standard() ? Mode::standard(std::min(mode.lambda(), delta)) : mode;
  for (int k = 0; k < 60; ++k) {
    if (reduced_energy(seed, params, check_mode).total < 0.0) return seed;
    seed = 2.0 * seed;
  }
  throw Error(ErrorCode::InvalidArgument, "could not find a path endpoint with negative energy");
}

}  // namespace detail

/// t* > 0 with d/dt I(t u) = 0 at t = t*: the scaling that puts u on the
/// Nehari manifold.
inline double fibering_scale(const Field& u, const ModelParams& params, const Mode& mode) {
  require(!u.is_zero(), ErrorCode::ZeroField, "cannot project the zero field");
  auto fn = [&](double t) { return detail::nehari_signed(t * u, params, mode); };
  double lo = 1.0, hi = 1.0;
  double flo = fn(lo);
  double fhi = flo;
  constexpr double t_min = 1e-12, t_max = 1e12;
  if (flo > 0.0) {
    while (fhi > 0.0) {
      lo = hi;
      flo = fhi;
      hi *= 2.0;
      require(hi <= t_max, ErrorCode::ProjectionFailed, "fibering map has no maximum below t=1e12");
      fhi = fn(hi);
    }
  } else if (flo < 0.0) {
    while (flo < 0.0) {
      hi = lo;
      fhi = flo;
      lo *= 0.5;
      require(lo >= t_min, ErrorCode::ProjectionFailed, "fibering map has no maximum above t=1e-12");
      flo = fn(lo);
    }
  } else {
    return 1.0;
  }
  if (fhi == 0.0) return hi;
  if (flo == 0.0) return lo;
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      fn, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

inline Field nehari_project(const Field& u, const ModelParams& params, const Mode& mode) {
  return fibering_scale(u, params, mode) * u;
}

namespace detail {

struct PathMaximum {
  Field point;      ///< sharpened maximizer along the path
  Evaluation eval;  ///< energy, potential and gradient at `point`
  int node = 0;     ///< index of the discrete maximum
};

/// Maximum of the energy over the ray path t -> t * endpoint, t in [0,1],
/// sampled at `nodes` points; ties go to the lower index. The discrete
/// maximum is sharpened by a root solve of the exact directional derivative
/// on the two adjacent segments.
inline PathMaximum ray_path_maximum(const Field& endpoint, int nodes, const ModelParams& params,
                                    const Mode& mode) {
  const int N = nodes;
  std::vector<double> levels(N, 0.0);
  for (int k = 1; k < N; ++k) {
    levels[k] = reduced_energy((static_cast<double>(k) / (N - 1)) * endpoint, params, mode).total;
  }
  int j = 1;
  for (int k = 2; k < N - 1; ++k) {
    if (levels[k] > levels[j]) j = k;
  }
  auto slope = [&](double t) {
    return weighted_dot(evaluate(t * endpoint, params, mode, true).gradient, endpoint);
  };
  // The slope vanishes at the origin itself, so the bracket starts just off it.
  double a = (j - 1 == 0 ? 1e-3 : static_cast<double>(j - 1)) / (N - 1);
  double b = static_cast<double>(j + 1) / (N - 1);
  double fa = slope(a), fb = slope(b);
  double t_star = static_cast<double>(j) / (N - 1);
  if (fa > 0.0 && fb < 0.0) {
    std::uintmax_t max_iter = 100;
    const auto br = boost::math::tools::toms748_solve(
        slope, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), max_iter);
    t_star = 0.5 * (br.first + br.second);
  }
  PathMaximum out;
  out.point = t_star * endpoint;
  out.eval = evaluate(out.point, params, mode, true);
  out.node = j;
  return out;
}

}  // namespace detail

/// Mountain-pass iteration over ray paths gamma(t) = t tau d from 0 to an
/// endpoint of negative energy: locate and sharpen the path maximum, take a
/// backtracking Sobolev-gradient step from it and rebuild the path as the ray
/// through the new point. A step is accepted only if it lowers the maximum of
/// the rebuilt path, so the path maxima decrease monotonically toward the
/// minimax level.
inline SolutionReport mountain_pass_solve(const ModelParams& params, const GridPtr& grid,
                                          const SolverOptions& opts, const Mode& mode) {
  opts.validate();
  mode.check(params);
  auto path_max = [&](const Field& direction) {
    const Field endpoint = detail::path_endpoint(direction, params, mode, opts.delta);
    return detail::ray_path_maximum(endpoint, opts.path_points, params, mode);
  };

  detail::PathMaximum current = path_max(detail::seed_field(grid, opts.seed));
  double step = opts.step.initial;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    detail::check_collapse(current.point, params);
    const Evaluation& ev = current.eval;
    if (gradient_norm(ev.gradient) <= opts.grad_tol) break;

    const Field G = detail::sobolev_gradient(ev.gradient, ev.phi.phi, params, mode);
    const double slope0 = weighted_dot(ev.gradient, G);
    const double e0 = ev.energy.total + detail::energy_noise(ev.energy);
    // A step longer than half of |w| in the same metric may jump across the
    // ridge into the basin of the trivial solution.
    const double w_norm = std::sqrt(detail::metric_norm2(current.point, ev.phi.phi, params, mode));
    const double max_step = 0.5 * w_norm / std::sqrt(slope0);
    step = std::min({opts.step.initial, step / opts.step.shrink, max_step});
    detail::PathMaximum trial = path_max(axpy(current.point, -step, G));
    int bt = 0;
    while (trial.eval.energy.total > e0 - opts.step.armijo * step * slope0 &&
           bt < opts.step.max_backtracks) {
      step *= opts.step.shrink;
      trial = path_max(axpy(current.point, -step, G));
      ++bt;
    }
    current = std::move(trial);
  }
  return make_report(current.point, params, mode, iter, opts.grad_tol, Method::mountain_pass);
}

/// Projected descent on the Nehari manifold: Sobolev-gradient step followed by
/// the fibering projection, with backtracking on the projected energy.
inline SolutionReport nehari_descent(const ModelParams& params, const GridPtr& grid,
                                     const SolverOptions& opts, const Mode& mode) {
  opts.validate();
  mode.check(params);
  Field u = nehari_project(detail::seed_field(grid, opts.seed), params, mode);
  double step = opts.step.initial;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    detail::check_collapse(u, params);
    const Evaluation ev = evaluate(u, params, mode, true);
    if (gradient_norm(ev.gradient) <= opts.grad_tol &&
        nehari_residual(ev.terms, params, mode) <= 1e-6) {
      break;
    }
    const Field G = detail::sobolev_gradient(ev.gradient, ev.phi.phi, params, mode);
    const double slope0 = weighted_dot(ev.gradient, G);
    const double e0 = ev.energy.total + detail::energy_noise(ev.energy);
    step = std::min(opts.step.initial, step / opts.step.shrink);
    Field trial = nehari_project(axpy(u, -step, G), params, mode);
    int bt = 0;
    while (reduced_energy(trial, params, mode).total > e0 - opts.step.armijo * step * slope0 &&
           bt < opts.step.max_backtracks) {
      step *= opts.step.shrink;
      trial = nehari_project(axpy(u, -step, G), params, mode);
      ++bt;
    }
    u = std::move(trial);
  }
  return make_report(u, params, mode, iter, opts.grad_tol, Method::nehari_descent);
}

inline SolutionReport solve(const ModelParams& params, const GridPtr& grid,
                            const SolverOptions& opts, const Mode& mode) {
  return opts.method == Method::mountain_pass ? mountain_pass_solve(params, grid, opts, mode)
                                              : nehari_descent(params, grid, opts, mode);
}

}  // namespace kgm
