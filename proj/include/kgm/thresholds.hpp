#pragma once

// Threshold algebra behind the existence region 0 < omega < m g(p):
// the coefficient triple (A, B, C), the admissible interval I_p, the quotient
// K_p(alpha), the choice of alpha and the nonnegativity certificate of
//   q(t) = A t^2 + B omega t + C Omega   on [0, omega],
// plus the classifier of the (p, omega/m) plane by the known existence and
// nonexistence results.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "kgm/error.hpp"

namespace kgm {

struct CoefficientTriple {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double p = 0.0;
  double alpha = 0.0;
};

inline CoefficientTriple coefficients(double p, double alpha) {
  require(p > 2.0 && p < 6.0, ErrorCode::InvalidArgument,
          "coefficients need p in (2,6), got " + std::to_string(p));
  CoefficientTriple t;
  t.p = p;
  t.alpha = alpha;
  t.a = (1.0 + 2.0 * alpha * (p - 3.0)) / p;
  t.b = (p - 10.0 * alpha * p - 4.0 + 24.0 * alpha) / (2.0 * p);
  t.c = (p - 2.0) * (1.0 - 6.0 * alpha) / (2.0 * p);
  return t;
}

/// Coefficient of int |grad u|^2 in the boundedness estimate; positive iff
/// alpha > (2-p)/(2(6-p)).
inline double gradient_coefficient(double p, double alpha) {
  return (p - 2.0 * alpha * p - 2.0 + 12.0 * alpha) / (2.0 * p);
}

struct OpenInterval {
  double lo;
  double hi;
  bool contains(double x) const { return x > lo && x < hi; }
};

inline OpenInterval interval_Ip(double p) {
  require(p > 2.0 && p < 4.0, ErrorCode::InvalidArgument,
          "I_p is defined for p in (2,4), got " + std::to_string(p));
  return {(2.0 - p) / (2.0 * (6.0 - p)), 1.0 / 6.0};
}

inline double h1_factor(double alpha) {
  return (1.0 - 2.0 * alpha) * (1.0 - 2.0 * alpha) / (1.0 - 6.0 * alpha);
}

inline double h2_factor(double p, double alpha) { return 1.0 / (1.0 + 2.0 * alpha * (p - 3.0)); }

inline void require_alpha_in_Ip(double p, double alpha) {
  require(interval_Ip(p).contains(alpha), ErrorCode::AlphaOutOfRange,
          "alpha=" + std::to_string(alpha) + " is outside I_p for p=" + std::to_string(p));
}

/// K_p(alpha) = p^2 / (8 (p-2)) * H1(alpha) * H2(alpha).
inline double kp(double p, double alpha) {
  require_alpha_in_Ip(p, alpha);
  return p * p / (8.0 * (p - 2.0)) * h1_factor(alpha) * h2_factor(p, alpha);
}

/// The same quantity written as (A+C)^2 / (4 A C).
inline double kp_quotient(double p, double alpha) {
  require_alpha_in_Ip(p, alpha);
  const auto t = coefficients(p, alpha);
  return (t.a + t.c) * (t.a + t.c) / (4.0 * t.a * t.c);
}

/// Infimum of K_p over I_p for 2 < p <= 3, approached at the lower endpoint.
inline double inf_kp(double p) {
  require(p > 2.0 && p <= 3.0, ErrorCode::InvalidArgument,
          "the infimum formula applies for p in (2,3], got " + std::to_string(p));
  return 1.0 / ((p - 2.0) * (4.0 - p));
}

inline double g(double p) {
  require(p > 2.0 && p < 4.0, ErrorCode::InvalidArgument,
          "g(p) is defined for p in (2,4), got " + std::to_string(p));
  return p < 3.0 ? std::sqrt((p - 2.0) * (4.0 - p)) : 1.0;
}

inline double g0(double p) {
  require(p > 2.0 && p <= 4.0, ErrorCode::InvalidArgument,
          "g0(p) is defined for p in (2,4], got " + std::to_string(p));
  return std::sqrt((p - 2.0) / 2.0);
}

struct QuadraticCheck {
  bool passed = false;        ///< analytic verdict
  bool grid_passed = false;   ///< dense-scan verdict
  bool agree = false;
  double min_value = 0.0;     ///< analytic minimum of q on [0, omega]
  double argmin = 0.0;
  std::optional<double> witness;  ///< some t in [0, omega] with q(t) < 0
};

inline QuadraticCheck check_quadratic_nonneg(double p, double alpha, double m, double omega,
                                             int grid_points = 20001) {
  require_alpha_in_Ip(p, alpha);
  require(omega > 0.0 && m >= 0.0, ErrorCode::InvalidArgument, "need omega > 0 and m >= 0");
  const auto t = coefficients(p, alpha);
  const double Omega = m * m - omega * omega;
  auto q = [&](double s) { return t.a * s * s + t.b * omega * s + t.c * Omega; };

  QuadraticCheck out;
  // A > 0 on I_p, so the minimum is at the vertex when it lies in the
  // interval and at the nearer endpoint otherwise.
  const double vertex = -t.b * omega / (2.0 * t.a);
  double arg = vertex;
  if (vertex < 0.0) arg = 0.0;
  if (vertex > omega) arg = omega;
  out.argmin = arg;
  out.min_value = q(arg);
  out.passed = out.min_value >= 0.0;

  out.grid_passed = true;
  double grid_min = std::numeric_limits<double>::infinity();
  double grid_arg = 0.0;
  for (int k = 0; k < grid_points; ++k) {
    const double s = omega * k / (grid_points - 1);
    const double v = q(s);
    if (v < grid_min) {
      grid_min = v;
      grid_arg = s;
    }
  }
  out.grid_passed = grid_min >= 0.0;
  out.agree = out.passed == out.grid_passed;
  if (!out.grid_passed) {
    out.witness = grid_arg;
  } else if (!out.passed) {
    out.witness = arg;
  }
  return out;
}

/// Margin kept below m^2/omega^2 when solving K_p(alpha) = m^2/omega^2.
inline constexpr double kAlphaMargin = 1e-9;

/// An alpha in I_p for which the quadratic certificate holds.
/// p in (3,4): the B = 0 choice (4-p)/(24-10p).
/// p in (2,3]: K_p increases on I_p, so the feasible set is (lo, alpha_max]
/// with K_p(alpha_max) = m^2/omega^2 - margin; the midpoint is returned.
inline double find_alpha(double p, double m, double omega) {
  require(p > 2.0 && p < 4.0, ErrorCode::InvalidArgument,
          "find_alpha needs p in (2,4), got " + std::to_string(p));
  require(omega > 0.0 && m > 0.0 && omega < m * g(p), ErrorCode::NoAlpha,
          "omega/m must lie below g(p)=" + std::to_string(g(p)));
  const auto range = interval_Ip(p);
  double alpha;
  if (p > 3.0) {
    alpha = (4.0 - p) / (24.0 - 10.0 * p);
  } else {
    const double target = m * m / (omega * omega) - kAlphaMargin;
    require(target > inf_kp(p), ErrorCode::NoAlpha, "omega/m too close to g(p)");
    auto k = [&](double a) {
      return p * p / (8.0 * (p - 2.0)) * h1_factor(a) * h2_factor(p, a);
    };
    double lo = range.lo, hi = range.hi;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (k(mid) <= target) lo = mid; else hi = mid;
    }
    alpha = 0.5 * (range.lo + lo);
  }
  require(range.contains(alpha), ErrorCode::NoAlpha, "selected alpha left I_p");
  const auto check = check_quadratic_nonneg(p, alpha, m, omega);
  require(check.passed && check.agree, ErrorCode::NoAlpha,
          "quadratic certificate failed for alpha=" + std::to_string(alpha));
  return alpha;
}

enum class Region { ExistenceThm1, ExistenceBF, ExistenceDM, Nonexistence, Unknown };

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::ExistenceThm1: return "ExistenceThm1";
    case Region::ExistenceBF: return "ExistenceBF";
    case Region::ExistenceDM: return "ExistenceDM";
    case Region::Nonexistence: return "Nonexistence";
    case Region::Unknown: return "Unknown";
  }
  return "Unknown";
}

inline Region classify_existence(double p, double omega_ratio) {
  require(std::isfinite(p) && std::isfinite(omega_ratio) && omega_ratio > 0.0,
          ErrorCode::InvalidArgument, "classifier needs omega/m > 0");
  if (p <= 2.0) return Region::Nonexistence;
  if (p < 4.0) return omega_ratio < g(p) ? Region::ExistenceThm1 : Region::Unknown;
  if (p == 4.0) return omega_ratio < g0(4.0) ? Region::ExistenceDM : Region::Unknown;
  if (p < 6.0) return omega_ratio < 1.0 ? Region::ExistenceBF : Region::Unknown;
  return omega_ratio <= 1.0 ? Region::Nonexistence : Region::Unknown;
}

struct ThresholdReport {
  double p = 0.0;
  double m = 0.0;
  double omega = 0.0;
  std::optional<double> g_of_p;
  std::optional<double> g0_of_p;
  std::optional<OpenInterval> interval;
  std::optional<double> inf_kp;
  std::optional<double> alpha_star;
  std::optional<QuadraticCheck> certificate;
  Region region = Region::Unknown;
};

inline ThresholdReport threshold_report(double p, double m, double omega) {
  require(m > 0.0 && omega > 0.0, ErrorCode::InvalidArgument, "need m > 0 and omega > 0");
  ThresholdReport r;
  r.p = p;
  r.m = m;
  r.omega = omega;
  r.region = classify_existence(p, omega / m);
  if (p > 2.0 && p < 4.0) {
    r.g_of_p = g(p);
    r.interval = interval_Ip(p);
  }
  if (p > 2.0 && p <= 4.0) r.g0_of_p = g0(p);
  if (p > 2.0 && p <= 3.0) r.inf_kp = inf_kp(p);
  if (r.region == Region::ExistenceThm1) {
    try {
      r.alpha_star = find_alpha(p, m, omega);
      r.certificate = check_quadratic_nonneg(p, *r.alpha_star, m, omega);
    } catch (const Error&) {
      // ratio within the margin of g(p): no certified alpha
    }
  }
  return r;
}

}  // namespace kgm
