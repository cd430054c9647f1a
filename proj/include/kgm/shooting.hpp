#pragma once

// Radial shooting for the decoupled equation (e = 0)
//   u'' + (2/r) u' = Omega u - |u|^(p-2) u,   u'(0) = 0,
// used as an independent oracle for the variational solvers. The central
// value s = u(0) is bisected between trajectories that cross zero (s too
// large) and trajectories that turn back up before crossing (s too small).
// Past the radius where the bisected trajectory can no longer be trusted the
// profile is continued by the exact decay A exp(-sqrt(Omega) r) / r of the
// linearized equation.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "kgm/error.hpp"
#include "kgm/model.hpp"

namespace kgm {

struct ShootingResult {
  Field u;
  double central_value = 0.0;  ///< bisected u(0)
  double bracket_width = 0.0;  ///< final width of the bracket on u(0)
  double fit_radius = 0.0;     ///< where the exponential tail takes over
  int bisections = 0;
};

namespace detail {

using ShootState = std::array<double, 2>;

enum class ShotOutcome { crossed, turned, reached_end };

struct ShootingProblem {
  double Omega;
  double p;
  void operator()(const ShootState& y, ShootState& dy, double r) const {
    dy[0] = y[1];
    dy[1] = Omega * y[0] - std::pow(std::abs(y[0]), p - 2.0) * y[0] - 2.0 * y[1] / r;
  }
};

inline constexpr double kShootTol = 1e-13;

/// Integrates from the series start near r = 0 and stops at the first sign
/// change of u or u'. `visit(r_prev, r, stepper)` sees every accepted step.
template <class Visit>
ShotOutcome shoot(const ShootingProblem& prob, double s, double r_end, double& r_event, Visit&& visit) {
  namespace ode = boost::numeric::odeint;
  const double r0 = 1e-4 / std::sqrt(prob.Omega);
  const double curv = (prob.Omega * s - std::pow(s, prob.p - 1.0)) / 3.0;
  ShootState y{s + 0.5 * curv * r0 * r0, curv * r0};
  auto stepper = ode::make_dense_output(kShootTol, kShootTol, ode::runge_kutta_dopri5<ShootState>());
  stepper.initialize(y, r0, 1e-3 / std::sqrt(prob.Omega));
  while (stepper.current_time() < r_end) {
    const auto [t_prev, t_cur] = stepper.do_step(prob);
    visit(t_prev, t_cur, stepper);
    const ShootState& st = stepper.current_state();
    if (st[0] <= 0.0) {
      r_event = t_cur;
      return ShotOutcome::crossed;
    }
    if (st[1] >= 0.0) {
      r_event = t_cur;
      return ShotOutcome::turned;
    }
  }
  r_event = r_end;
  return ShotOutcome::reached_end;
}

}  // namespace detail

inline ShootingResult shoot_scalar_field(double Omega, double p, const GridPtr& grid) {
  require(std::isfinite(Omega) && Omega > 0.0, ErrorCode::InvalidArgument, "shooting needs Omega > 0");
  require(p > 2.0 && p < 6.0, ErrorCode::InvalidArgument, "shooting needs 2 < p < 6");
  require(grid != nullptr, ErrorCode::InvalidArgument, "shooting needs a grid");
  const detail::ShootingProblem prob{Omega, p};
  const double r_end = grid->r_max();
  auto ignore = [](double, double, const auto&) {};

  // Below s = Omega^(1/(p-2)) the curvature at the origin is positive and the
  // trajectory turns immediately.
  double lo = std::pow(Omega, 1.0 / (p - 2.0));
  double hi = 2.0 * lo;
  double r_event = 0.0;
  int expand = 0;
  while (detail::shoot(prob, hi, r_end, r_event, ignore) != detail::ShotOutcome::crossed) {
    lo = hi;
    hi *= 2.0;
    require(++expand < 60, ErrorCode::BisectionStalled, "no crossing trajectory found");
  }

  ShootingResult out;
  for (; out.bisections < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
       ++out.bisections) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const auto outcome = detail::shoot(prob, mid, r_end, r_event, ignore);
    require(outcome != detail::ShotOutcome::reached_end, ErrorCode::BisectionStalled,
            "trajectory neither crossed nor turned before r_max; enlarge the domain");
    (outcome == detail::ShotOutcome::crossed ? hi : lo) = mid;
  }
  require(hi - lo <= 1e-10 * hi, ErrorCode::BisectionStalled, "bracket on u(0) did not shrink below 1e-10");
  out.central_value = 0.5 * (lo + hi);
  out.bracket_width = hi - lo;

  // Sample the final trajectory at the nodes it passes, then fit the tail.
  const auto r = grid->nodes();
  const int n = grid->n();
  std::vector<double> values(n, 0.0);
  std::vector<bool> filled(n, false);
  double fit_radius = 0.0, fit_value = 0.0;
  const double tail_level = 1e-6 * out.central_value;
  int next = 0;
  bool below = false;
  auto visit = [&](double, double t_cur, const auto& stepper) {
    detail::ShootState y;
    while (next < n && r[next] <= t_cur) {
      if (r[next] >= stepper.previous_time()) {
        stepper.calc_state(r[next], y);
      } else {
        const double curv = (Omega * out.central_value - std::pow(out.central_value, p - 1.0)) / 3.0;
        y[0] = out.central_value + 0.5 * curv * r[next] * r[next];
      }
      values[next] = y[0];
      filled[next] = true;
      ++next;
    }
    if (!below) {
      const double u_cur = stepper.current_state()[0];
      fit_radius = t_cur;
      fit_value = u_cur;
      below = u_cur < tail_level;
    }
  };
  detail::shoot(prob, out.central_value, r_end, r_event, visit);
  // Keep away from the departure of the bisected trajectory.
  if (!below) {
    fit_radius = 0.8 * r_event;
    require(fit_radius > r[0], ErrorCode::BisectionStalled, "trajectory departs before the first node");
    detail::shoot(prob, out.central_value, fit_radius, r_event, [&](double, double t_cur, const auto& st) {
      if (t_cur <= fit_radius) {
        fit_value = st.current_state()[0];
        out.fit_radius = t_cur;
      }
    });
    fit_radius = out.fit_radius;
  }
  out.fit_radius = fit_radius;
  const double k = std::sqrt(Omega);
  const double amplitude = fit_value * fit_radius * std::exp(k * fit_radius);
  out.u = Field(grid);
  for (int i = 0; i < n; ++i) {
    out.u[i] = (filled[i] && r[i] <= fit_radius) ? values[i] : amplitude * std::exp(-k * r[i]) / r[i];
  }
  out.u[n - 1] = 0.0;
  return out;
}

}  // namespace kgm
