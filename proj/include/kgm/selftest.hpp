#pragma once

// Invariant suite behind the `selftest` subcommand, at reduced sizes.
// Each check prints one verdict line; `quick` keeps the cheap ones only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgm/energy.hpp"
#include "kgm/model.hpp"
#include "kgm/phi_reduction.hpp"
#include "kgm/shooting.hpp"
#include "kgm/solver.hpp"
#include "kgm/sweep.hpp"
#include "kgm/thresholds.hpp"

namespace kgm {

using Rng = std::mt19937_64;

struct SelftestOptions {
  bool quick = false;
  /// Fault injection: "" or "ab-identity" (flips the sign of B).
  std::string sabotage;
  std::uint64_t seed = 42;
};

struct CheckOutcome {
  bool passed = false;
  std::string detail;
};

struct SelfCheck {
  std::string name;
  bool quick = true;
  std::function<CheckOutcome(Rng&, const SelftestOptions&)> run;
};

struct SelftestResult {
  int passed = 0;
  int failed = 0;
  std::vector<std::string> failures;
  bool ok() const { return failed == 0; }
};

inline const std::vector<std::string>& known_sabotages() {
  static const std::vector<std::string> names{"ab-identity"};
  return names;
}

namespace detail {

inline std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Field random_bump(Rng& rng, const GridPtr& grid) {
  const double a = uniform(rng, 0.5, 3.0), w = uniform(rng, 1.0, 4.0), c = uniform(rng, 0.0, 3.0);
  Field f = sample(grid, [&](double r) { return a * std::exp(-(r - c) * (r - c) / (w * w)); });
  f[f.size() - 1] = 0.0;
  return f;
}

inline ModelParams power_params(double p, double omega, double e = 1.0) {
  ModelParams params;
  params.m = 1.0;
  params.omega = omega;
  params.e = e;
  params.nonlinearity = Nonlinearity::power(p);
  return params;
}

inline CheckOutcome verdict(bool ok, std::string detail) { return {ok, std::move(detail)}; }

}  // namespace detail

inline std::vector<SelfCheck> invariant_suite() {
  using detail::sci;
  using detail::uniform;
  using detail::verdict;
  std::vector<SelfCheck> s;

  s.push_back({"grid: weights integrate 1 to 4 pi R^3 / 3", true, [](Rng&, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 10.0);
                 const double exact = 4.0 * pi * 1000.0 / 3.0;
                 const double err = std::abs(integrate(sample(grid, [](double) { return 1.0; })) - exact) / exact;
                 return verdict(err < 1e-10, "rel err " + sci(err));
               }});
  s.push_back({"quadrature: gaussian integral and second-order refinement", true,
               [](Rng&, const SelftestOptions&) {
                 auto err = [](int n) {
                   const auto grid = make_grid(n, 10.0);
                   const double exact = std::pow(pi, 1.5);
                   return std::abs(integrate(sample(grid, [](double r) { return std::exp(-r * r); })) - exact) / exact;
                 };
                 const double e1 = err(4000), e2 = err(8000);
                 return verdict(e2 < 1e-6 && e1 / e2 >= 3.5, "err " + sci(e2) + " ratio " + sci(e1 / e2));
               }});
  s.push_back({"norms: homogeneity under u -> c u", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(400, 20.0);
                 double worst = 0.0;
                 for (int k = 0; k < 5; ++k) {
                   const Field u = detail::random_bump(rng, grid);
                   const double c = uniform(rng, -5.0, 5.0);
                   const auto a = field_norms(u, 3.0), b = field_norms(c * u, 3.0);
                   for (auto [x, y] : {std::pair{a.d12, b.d12}, {a.l2, b.l2}, {a.lp, b.lp}, {a.h1, b.h1}}) {
                     worst = std::max(worst, std::abs(y - std::abs(c) * x) / (std::abs(c) * x));
                   }
                 }
                 return verdict(worst < 1e-12, "max rel err " + sci(worst));
               }});
  s.push_back({"nonlinearity: f' matches the derivative of f", true, [](Rng& rng, const SelftestOptions&) {
                 double worst = 0.0;
                 for (const auto& nl : {Nonlinearity::power(3.0), Nonlinearity::power(4.5),
                                        Nonlinearity::double_power(5.0, 7.0, 5.0)}) {
                   for (int k = 0; k < 100; ++k) {
                     double t = uniform(rng, -10.0, 10.0);
                     if (std::abs(t) < 1e-3) t = 0.5;
                     const double h = 1e-6 * std::max(1.0, std::abs(t));
                     const double fd = (nl.eval(t + h).f - nl.eval(t - h).f) / (2.0 * h);
                     const double fp = nl.eval(t).fprime;
                     worst = std::max(worst, std::abs(fd - fp) / std::max(std::abs(fp), 1e-300));
                   }
                 }
                 return verdict(worst < 1e-6, "max rel err " + sci(worst));
               }});
  s.push_back({"nonlinearity: hypotheses (f2)-(f4) for the double power", true,
               [](Rng&, const SelftestOptions&) {
                 const auto nl = Nonlinearity::double_power(5.0, 7.0, 5.0);
                 const auto good = verify_f_hypotheses(nl, 5.0, 2001);
                 const auto bad = verify_f_hypotheses(nl, 7.0, 2001);
                 return verdict(good.passed && good.min_ratio >= 5.0 * (1.0 - 1e-12) && !bad.passed && bad.witness,
                                "min ratio " + sci(good.min_ratio));
               }});
  s.push_back({"phi: 0 <= phi <= omega/e on random bumps", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 30.0);
                 const auto params = detail::power_params(3.0, 0.7);
                 double lo = INFINITY, hi = -INFINITY;
                 for (int k = 0; k < 10; ++k) {
                   const auto phi = solve_phi(10.0 * detail::random_bump(rng, grid), params).phi;
                   for (double v : phi.values) {
                     lo = std::min(lo, v);
                     hi = std::max(hi, v);
                   }
                 }
                 return verdict(lo >= -1e-10 && hi <= 0.7 + 1e-10, "range [" + sci(lo) + ", " + sci(hi) + "]");
               }});
  s.push_back({"phi: electrostatic identity gap", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 30.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   worst = std::max(worst, solve_phi(detail::random_bump(rng, grid), params).identity_gap);
                 }
                 return verdict(worst < 1e-6, "max gap " + sci(worst));
               }});
  s.push_back({"phi: repeated solves agree bitwise", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 30.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 const Field u = detail::random_bump(rng, grid);
                 return verdict(solve_phi(u, params).phi.values == solve_phi(u, params).phi.values, "");
               }});
  s.push_back({"phi: charge grows with amplitude", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 30.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 bool ok = true;
                 for (int k = 0; k < 5; ++k) {
                   const Field u = detail::random_bump(rng, grid);
                   auto charge = [&](const Field& v) {
                     const auto phi = solve_phi(v, params).phi;
                     double q = 0.0;
                     const auto w = grid->weights();
                     for (std::size_t i = 0; i < v.size(); ++i) q += w[i] * phi[i] * v[i] * v[i];
                     return q;
                   };
                   ok = ok && charge(2.0 * u) >= charge(u);
                 }
                 return verdict(ok, "");
               }});
  s.push_back({"phi: max phi approaches omega/e from below", true, [](Rng&, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 30.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 const Field bump = sample(grid, [](double r) { return std::exp(-r * r / 4.0); });
                 double prev = 0.0;
                 bool ok = true;
                 for (double a : {10.0, 100.0, 1000.0}) {
                   const auto phi = solve_phi(a * bump, params).phi;
                   const double mx = *std::max_element(phi.values.begin(), phi.values.end());
                   // ulp-level overshoot is rounding in the tridiagonal solve
                   ok = ok && mx >= prev && mx <= 0.5 * (1.0 + 1e-14);
                   prev = mx;
                 }
                 return verdict(ok, "max phi at 1000: " + sci(prev));
               }});
  s.push_back({"energy: central differences match the gradient", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(400, 20.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 const Mode mode = Mode::standard(0.8);
                 double worst = 0.0;
                 for (int k = 0; k < 5; ++k) {
                   const Field u = detail::random_bump(rng, grid);
                   const Field v = detail::random_bump(rng, grid);
                   const double h = 1e-5;
                   const double fd = (reduced_energy(axpy(u, h, v), params, mode).total -
                                      reduced_energy(axpy(u, -h, v), params, mode).total) /
                                     (2.0 * h);
                   const double an = weighted_dot(reduced_gradient(u, params, mode), v);
                   worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
                 }
                 return verdict(worst < 1e-5, "max rel err " + sci(worst));
               }});
  s.push_back({"energy: two-field action at phi_u equals I(u)", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 30.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 const Mode mode = Mode::standard(1.0);
                 double worst = 0.0;
                 for (int k = 0; k < 5; ++k) {
                   const Field u = detail::random_bump(rng, grid);
                   const auto ev = evaluate(u, params, mode, false);
                   const double s_val = two_field_action(u, ev.phi.phi, params, mode);
                   worst = std::max(worst, std::abs(s_val - ev.energy.total) / std::max(1.0, std::abs(s_val)));
                 }
                 return verdict(worst < 1e-8, "max gap " + sci(worst));
               }});
  s.push_back({"energy: I_lambda nonincreasing in lambda", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(400, 20.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 bool ok = true;
                 for (int k = 0; k < 5; ++k) {
                   const Field u = detail::random_bump(rng, grid);
                   double prev = INFINITY;
                   for (double lambda : {0.5, 0.6, 0.75, 0.9, 1.0}) {
                     const double e = reduced_energy(u, params, Mode::standard(lambda)).total;
                     ok = ok && e <= prev;
                     prev = e;
                   }
                 }
                 return verdict(ok, "");
               }});
  s.push_back({"energy: positive on a small sphere", true, [](Rng& rng, const SelftestOptions&) {
                 const auto grid = make_grid(400, 20.0);
                 const auto params = detail::power_params(3.0, 0.5);
                 double lowest = INFINITY;
                 for (int k = 0; k < 10; ++k) {
                   const Field u = detail::random_bump(rng, grid);
                   const Field small = (1e-2 / field_norms(u, 3.0).h1) * u;
                   lowest = std::min(lowest, reduced_energy(small, params, Mode::standard(1.0)).total);
                 }
                 return verdict(lowest > 0.0, "min energy " + sci(lowest));
               }});
  s.push_back({"thresholds: A + B = C", true, [](Rng& rng, const SelftestOptions& o) {
                 const bool flip = o.sabotage == "ab-identity";
                 double worst = 0.0;
                 for (int k = 0; k < 10000; ++k) {
                   const double p = uniform(rng, 2.0 + 1e-9, 6.0);
                   const double alpha = uniform(rng, -1.0, 1.0);
                   const auto t = coefficients(p, alpha);
                   const double b = flip ? -t.b : t.b;
                   worst = std::max(worst, std::abs(t.a + b - t.c));
                 }
                 return verdict(worst < 1e-14, "max |A+B-C| " + sci(worst));
               }});
  s.push_back({"thresholds: A > 0 and C > 0 on I_p", true, [](Rng& rng, const SelftestOptions&) {
                 bool ok = true;
                 for (int k = 0; k < 10000; ++k) {
                   const double p = uniform(rng, 2.0 + 1e-6, 4.0 - 1e-6);
                   const auto I = interval_Ip(p);
                   const auto t = coefficients(p, uniform(rng, I.lo, I.hi));
                   ok = ok && t.a > 0.0 && t.c > 0.0;
                 }
                 return verdict(ok, "");
               }});
  s.push_back({"thresholds: g >= g0 on (2,4), strictly on (2,3)", true, [](Rng&, const SelftestOptions&) {
                 bool ok = true;
                 for (int k = 1; k < 1000; ++k) {
                   const double p = 2.0 + 2.0 * k / 1000.0;
                   ok = ok && g(p) >= g0(p) && (p >= 3.0 || g(p) > g0(p));
                 }
                 return verdict(ok, "");
               }});
  s.push_back({"thresholds: K_3 increasing on I_3", true, [](Rng&, const SelftestOptions&) {
                 bool ok = true;
                 double prev = -INFINITY;
                 for (int k = 1; k < 10000; ++k) {
                   const double v = kp(3.0, -1.0 / 6.0 + (1.0 / 3.0) * k / 10000.0);
                   ok = ok && v > prev;
                   prev = v;
                 }
                 return verdict(ok, "");
               }});
  s.push_back({"thresholds: H1, H2 positive and increasing", true, [](Rng&, const SelftestOptions&) {
                 bool ok = true;
                 for (double p : {2.1, 2.5, 2.9}) {
                   const auto I = interval_Ip(p);
                   double p1 = -INFINITY, p2 = -INFINITY;
                   for (int k = 1; k < 2000; ++k) {
                     const double a = I.lo + (I.hi - I.lo) * k / 2000.0;
                     const double v1 = h1_factor(a), v2 = h2_factor(p, a);
                     ok = ok && v1 > 0.0 && v2 > 0.0 && v1 > p1 && v2 > p2;
                     p1 = v1;
                     p2 = v2;
                   }
                 }
                 return verdict(ok, "");
               }});
  s.push_back({"thresholds: certificate holds iff K_p <= m^2/omega^2", true,
               [](Rng& rng, const SelftestOptions&) {
                 int mismatches = 0;
                 for (int k = 0; k < 500; ++k) {
                   const double p = uniform(rng, 2.05, 3.0);
                   const auto I = interval_Ip(p);
                   const double alpha = uniform(rng, I.lo + 1e-6, I.hi - 1e-6);
                   const double omega = uniform(rng, 0.05, 0.99);
                   const double K = kp(p, alpha), target = 1.0 / (omega * omega);
                   // Skip instances on the boundary, where rounding decides.
                   if (std::abs(K - target) < 1e-9 * target) continue;
                   const auto c = check_quadratic_nonneg(p, alpha, 1.0, omega, 2001);
                   if (c.passed != (K <= target)) ++mismatches;
                 }
                 return verdict(mismatches == 0, std::to_string(mismatches) + " mismatches");
               }});
  s.push_back({"thresholds: inf K_p matches a brute-force scan", true, [](Rng&, const SelftestOptions&) {
                 double worst = 0.0;
                 for (double p : {2.1, 2.5, 3.0}) {
                   const auto I = interval_Ip(p);
                   double best = INFINITY;
                   for (int k = 1; k < 100000; ++k) best = std::min(best, kp(p, I.lo + (I.hi - I.lo) * k / 100000.0));
                   worst = std::max(worst, std::abs(best - inf_kp(p)) / inf_kp(p));
                 }
                 return verdict(worst < 1e-4, "max rel err " + sci(worst));
               }});
  s.push_back({"thresholds: classifier truth table", true, [](Rng&, const SelftestOptions&) {
                 const bool ok = classify_existence(2.5, 0.8) == Region::ExistenceThm1 &&
                                 classify_existence(6.0, 0.9) == Region::Nonexistence &&
                                 classify_existence(2.5, 0.95) == Region::Unknown &&
                                 classify_existence(4.0, 0.5) == Region::ExistenceDM &&
                                 classify_existence(4.5, 0.9) == Region::ExistenceBF &&
                                 classify_existence(2.0, 0.5) == Region::Nonexistence;
                 return verdict(ok, "");
               }});
  s.push_back({"sweep: identical output across runs and worker counts", true,
               [](Rng&, const SelftestOptions&) {
                 auto run = [](unsigned workers) {
                   std::ostringstream os;
                   write_region_csv(os, region_sweep(parse_range("2.05:3.95:0.05"),
                                                     parse_range("0.05:1.0:0.05"), workers));
                   return os.str();
                 };
                 return verdict(run(1) == run(4), "");
               }});
  s.push_back({"solver: mountain pass converges with small residuals", false,
               [](Rng&, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 40.0);
                 const auto r = solve(detail::power_params(3.0, 0.5), grid, SolverOptions{}, Mode::standard(1.0));
                 return verdict(r.converged && r.residuals.pohozaev < 1e-2 && r.electrostatic_gap < 1e-6,
                                "energy " + sci(r.energy.total) + " pohozaev " + sci(r.residuals.pohozaev));
               }});
  s.push_back({"solver: mountain pass and Nehari descent agree", false, [](Rng&, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 40.0);
                 const auto params = detail::power_params(2.5, 0.8);
                 SolverOptions a, b;
                 b.method = Method::nehari_descent;
                 const auto ra = solve(params, grid, a, Mode::standard(1.0));
                 const auto rb = solve(params, grid, b, Mode::standard(1.0));
                 const double rel = std::abs(ra.energy.total - rb.energy.total) / std::abs(rb.energy.total);
                 return verdict(ra.converged && rb.converged && rel < 1e-3, "rel diff " + sci(rel));
               }});
  s.push_back({"solver: e = 0 solution matches the shooting oracle", false, [](Rng&, const SelftestOptions&) {
                 const auto grid = make_grid(1000, 40.0);
                 const auto r = solve(detail::power_params(3.0, 0.5, 0.0), grid, SolverOptions{}, Mode::standard(1.0));
                 const auto shot = shoot_scalar_field(0.75, 3.0, grid);
                 const Field d = r.u - shot.u;
                 const double rel = std::sqrt(weighted_dot(d, d) / weighted_dot(shot.u, shot.u));
                 return verdict(r.converged && r.phi_max == 0.0 && rel < 1e-3, "rel L2 " + sci(rel));
               }});
  return s;
}

/// Runs the suite, printing "[PASS] name (detail)" or "[FAIL] ..." per check.
/// `extra` checks (e.g. the CLI config round trip) run after the built-ins.
inline SelftestResult run_selftest(const SelftestOptions& opts, std::ostream& os,
                                   const std::vector<SelfCheck>& extra = {}) {
  require(opts.sabotage.empty() ||
              std::find(known_sabotages().begin(), known_sabotages().end(), opts.sabotage) !=
                  known_sabotages().end(),
          ErrorCode::InvalidArgument, "unknown sabotage mode '" + opts.sabotage + "'");
  auto checks = invariant_suite();
  checks.insert(checks.end(), extra.begin(), extra.end());
  SelftestResult result;
  Rng rng(opts.seed);
  for (const auto& c : checks) {
    if (opts.quick && !c.quick) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckOutcome out;
    try {
      out = c.run(rng, opts);
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    os << (out.passed ? "[PASS] " : "[FAIL] ") << c.name;
    if (!out.detail.empty()) os << " (" << out.detail << ")";
    os << " [" << detail::sci(secs) << " s]\n";
    if (out.passed) {
      ++result.passed;
    } else {
      ++result.failed;
      result.failures.push_back(c.name);
    }
  }
  return result;
}

}  // namespace kgm
