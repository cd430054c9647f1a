#pragma once

// Domain types shared by every solver stage: physical parameters, the
// nonlinearity family, the radial grid with its quadrature, and fields.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kgm/error.hpp"

namespace kgm {

inline constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Nonlinearity

/// f(t) = |t|^p / p.
struct PowerLaw {
  double p;
};

/// f(t) = |t|^q / (1 + |t|^(q-p)): behaves like |t|^q near zero and like
/// |t|^p at infinity. `alpha` is the superquadraticity constant of
/// alpha f(t) <= f'(t) t, `c1`/`c2` the growth constants of the lower and
/// derivative bounds.
struct DoublePowerLaw {
  double p;
  double q;
  double alpha;
  double c1;
  double c2;
};

struct FValue {
  double f;
  double fprime;
};

class Nonlinearity {
 public:
  static Nonlinearity power(double p) {
    require(std::isfinite(p) && p > 2.0, ErrorCode::InvalidArgument,
            "power exponent must satisfy p > 2, got " + std::to_string(p));
    return Nonlinearity(PowerLaw{p});
  }

  /// Requires 4 < alpha <= p < 6 < q.
  static Nonlinearity double_power(double p, double q, double alpha) {
    require(std::isfinite(p) && std::isfinite(q) && std::isfinite(alpha),
            ErrorCode::InvalidArgument, "double-power exponents must be finite");
    require(p > 4.0 && p < 6.0, ErrorCode::InvalidArgument,
            "double-power requires 4 < p < 6, got p=" + std::to_string(p));
    require(q > 6.0, ErrorCode::InvalidArgument,
            "double-power requires q > 6 (p<6<q), got q=" + std::to_string(q));
    require(alpha > 4.0 && alpha <= p, ErrorCode::InvalidArgument,
            "double-power requires 4 < alpha <= p, got alpha=" + std::to_string(alpha));
    // f/min(|t|^p,|t|^q) = 1/(1+s) or s/(1+s), both >= 1/2; the derivative
    // ratio (q + p s)/(1+s)^2 and s (q + p s)/(1+s)^2 are bounded by q.
    return Nonlinearity(DoublePowerLaw{p, q, alpha, 0.5, q});
  }

  bool is_power() const { return std::holds_alternative<PowerLaw>(law_); }
  bool is_double_power() const { return std::holds_alternative<DoublePowerLaw>(law_); }

  const PowerLaw& as_power() const { return std::get<PowerLaw>(law_); }
  const DoublePowerLaw& as_double_power() const { return std::get<DoublePowerLaw>(law_); }

  /// Exponent governing growth at infinity; used for the L^p norm.
  double p() const {
    return is_power() ? as_power().p : as_double_power().p;
  }

  FValue eval(double t) const {
    const double a = std::abs(t);
    if (a == 0.0) return {0.0, 0.0};
    const double sign = t < 0.0 ? -1.0 : 1.0;
    if (const auto* pw = std::get_if<PowerLaw>(&law_)) {
      const double ap1 = std::pow(a, pw->p - 1.0);
      return {ap1 * a / pw->p, sign * ap1};
    }
    const auto& dp = as_double_power();
    const double ap1 = std::pow(a, dp.p - 1.0);
    const double s = std::pow(a, dp.q - dp.p);
    const double one_s = 1.0 + s;
    return {ap1 * a * s / one_s, sign * ap1 * s * (dp.q + dp.p * s) / (one_s * one_s)};
  }

  std::string describe() const {
    if (is_power()) return "power(p=" + std::to_string(as_power().p) + ")";
    const auto& dp = as_double_power();
    return "double_power(p=" + std::to_string(dp.p) + ", q=" + std::to_string(dp.q) + ")";
  }

  bool operator==(const Nonlinearity& other) const {
    if (is_power() != other.is_power()) return false;
    if (is_power()) return as_power().p == other.as_power().p;
    const auto& a = as_double_power();
    const auto& b = other.as_double_power();
    return a.p == b.p && a.q == b.q && a.alpha == b.alpha;
  }

 private:
  explicit Nonlinearity(std::variant<PowerLaw, DoublePowerLaw> law) : law_(law) {}
  std::variant<PowerLaw, DoublePowerLaw> law_;
};

inline FValue eval_f(const Nonlinearity& nl, double t) { return nl.eval(t); }

struct FHypothesisReport {
  bool passed = true;
  double min_ratio = 0.0;         ///< min over samples of f'(t) t / f(t)
  double f3_min_constant = 0.0;   ///< min of f / min(|t|^p, |t|^q); NaN for power laws
  double f4_max_constant = 0.0;   ///< max of |f'| / min(|t|^(p-1), |t|^(q-1)); NaN for power laws
  std::optional<double> witness;  ///< first t violating a hypothesis
  std::string violated;           ///< "f2", "f3" or "f4"
};

/// Samples t on a symmetric log grid over [1e-8, 1e8] and checks
/// alpha f(t) <= f'(t) t, and for the double-power law the two growth bounds
/// with the stored constants.
inline FHypothesisReport verify_f_hypotheses(const Nonlinearity& nl, double alpha, int samples) {
  require(alpha > 4.0, ErrorCode::InvalidArgument, "alpha must exceed 4");
  require(samples >= 2, ErrorCode::InvalidArgument, "need at least two samples");
  FHypothesisReport report;
  report.min_ratio = INFINITY;
  const bool dp = nl.is_double_power();
  report.f3_min_constant = dp ? INFINITY : NAN;
  report.f4_max_constant = dp ? 0.0 : NAN;

  auto fail = [&](double t, const char* which) {
    if (report.passed) {
      report.passed = false;
      report.witness = t;
      report.violated = which;
    }
  };

  const double lo = -8.0, hi = 8.0;
  for (int k = 0; k < samples; ++k) {
    const double mag = std::pow(10.0, lo + (hi - lo) * k / (samples - 1));
    for (double t : {mag, -mag}) {
      const auto [f, fp] = nl.eval(t);
      const double ratio = fp * t / f;
      report.min_ratio = std::min(report.min_ratio, ratio);
      // Relative slack absorbs rounding in the homogeneous case, where the
      // two sides agree exactly in exact arithmetic.
      if (alpha * f > fp * t * (1.0 + 1e-12)) fail(t, "f2");
      if (dp) {
        const auto& law = nl.as_double_power();
        const double a = std::abs(t);
        const double lower = std::min(std::pow(a, law.p), std::pow(a, law.q));
        const double dlower = std::min(std::pow(a, law.p - 1.0), std::pow(a, law.q - 1.0));
        const double c3 = f / lower;
        const double c4 = std::abs(fp) / dlower;
        report.f3_min_constant = std::min(report.f3_min_constant, c3);
        report.f4_max_constant = std::max(report.f4_max_constant, c4);
        if (c3 < law.c1 * (1.0 - 1e-12)) fail(t, "f3");
        if (c4 > law.c2 * (1.0 + 1e-12)) fail(t, "f4");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Parameters

struct ModelParams {
  double m = 1.0;
  double omega = 0.5;
  double e = 1.0;
  Nonlinearity nonlinearity = Nonlinearity::power(3.0);

  /// m^2 - omega^2; zero exactly in the zero-mass mode omega = m.
  double Omega() const { return m * m - omega * omega; }

  /// Upper bound of the electrostatic potential, omega/e (infinite when e = 0).
  double phi_bound() const { return e > 0.0 ? omega / e : INFINITY; }

  void validate() const {
    require(std::isfinite(m) && m >= 0.0, ErrorCode::InvalidArgument, "m must be >= 0");
    require(std::isfinite(omega) && omega > 0.0, ErrorCode::InvalidArgument, "omega must be > 0");
    // e = 0 decouples the system; kept admissible for the scalar-field oracle.
    require(std::isfinite(e) && e >= 0.0, ErrorCode::InvalidArgument, "e must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Grid

/// Outer boundary condition for the electrostatic potential.
enum class PotentialBoundary {
  coulomb,    ///< phi'(R) + phi(R)/R = 0, i.e. a harmonic Q/(4 pi r) tail outside the ball
  dirichlet,  ///< phi(R) = 0
};

/// Uniform radial grid r_i = (i+1) h, i = 0..n-1, h = R/n. The last node sits
/// on r = R where the matter field is pinned to zero. Weights are the
/// trapezoidal 4 pi r_i^2 h (half of it at R), except at the first node, which
/// gets the volume of the ball of radius 3h/2 so that the flux balance of the
/// cell touching the origin stays consistent for fields with u'(0) = 0.
/// Shell volumes would integrate constants exactly but add an O(h^2) bias of
/// pi h^3 / 3 per node to every other integral.
class RadialGrid {
 public:
  RadialGrid(int n, double r_max, PotentialBoundary bc) : n_(n), r_max_(r_max), bc_(bc) {
    h_ = r_max / n;
    nodes_.resize(n);
    weights_.resize(n);
    face_areas_.resize(n - 1);
    for (int i = 0; i < n; ++i) nodes_[i] = (i + 1) * h_;
    nodes_[n - 1] = r_max;
    for (int i = 0; i < n; ++i) {
      const double left = i == 0 ? 0.0 : nodes_[i] - 0.5 * h_;
      const double right = i == n - 1 ? r_max : nodes_[i] + 0.5 * h_;
      weights_[i] = 4.0 * pi / 3.0 * (right * right * right - left * left * left);
    }
    for (int i = 0; i < n - 1; ++i) {
      const double face = nodes_[i] + 0.5 * h_;
      face_areas_[i] = 4.0 * pi * face * face;
    }
  }

  int n() const { return n_; }
  double r_max() const { return r_max_; }
  double h() const { return h_; }
  PotentialBoundary potential_boundary() const { return bc_; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  /// 4 pi r^2 at the midpoint between node i and i+1.
  std::span<const double> face_areas() const { return face_areas_; }

  bool same_as(const RadialGrid& other) const {
    return n_ == other.n_ && r_max_ == other.r_max_ && bc_ == other.bc_;
  }

 private:
  int n_;
  double r_max_;
  double h_;
  PotentialBoundary bc_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> face_areas_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(int n, double r_max,
                         PotentialBoundary bc = PotentialBoundary::coulomb) {
  require(n >= 16, ErrorCode::InvalidArgument, "grid needs n >= 16, got " + std::to_string(n));
  require(std::isfinite(r_max) && r_max > 0.0, ErrorCode::InvalidArgument,
          "grid needs r_max > 0");
  return std::make_shared<const RadialGrid>(n, r_max, bc);
}

// ---------------------------------------------------------------------------
// Fields

struct Field {
  GridPtr grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(GridPtr g) : grid(std::move(g)), values(grid->n(), 0.0) {}
  Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    require(static_cast<int>(values.size()) == grid->n(), ErrorCode::InvalidArgument,
            "field size does not match its grid");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
  bool is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  }
};

/// Samples a callable r -> value on the grid nodes.
template <class Fn>
Field sample(const GridPtr& grid, Fn&& fn) {
  Field out(grid);
  const auto r = grid->nodes();
  for (int i = 0; i < grid->n(); ++i) out[i] = fn(r[i]);
  return out;
}

inline void require_same_grid(const Field& a, const Field& b) {
  require(a.grid && b.grid && a.grid->same_as(*b.grid), ErrorCode::InvalidArgument,
          "fields live on different grids");
}

inline Field operator*(double c, Field f) {
  for (double& v : f.values) v *= c;
  return f;
}

inline Field operator+(Field a, const Field& b) {
  require_same_grid(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Field operator-(Field a, const Field& b) {
  require_same_grid(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

/// a + c * b
inline Field axpy(const Field& a, double c, const Field& b) {
  require_same_grid(a, b);
  Field out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += c * b[i];
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature and norms

/// Discrete surrogate of the integral over R^3 of a radial function.
inline double integrate(const Field& g) {
  require(g.all_finite(), ErrorCode::NonFiniteInput, "integrand is not finite");
  const auto w = g.grid->weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += w[i] * g[i];
  return sum;
}

/// Weighted pairing sum_i w_i a_i b_i.
inline double weighted_dot(const Field& a, const Field& b) {
  require_same_grid(a, b);
  const auto w = a.grid->weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += w[i] * a[i] * b[i];
  return sum;
}

/// sum over faces of A_{i+1/2} (v_{i+1} - v_i)^2 / h: the discrete
/// integral of |grad v|^2 inside the ball.
inline double dirichlet_form(const RadialGrid& grid, std::span<const double> v) {
  const auto a = grid.face_areas();
  const double h = grid.h();
  double sum = 0.0;
  for (int i = 0; i + 1 < grid.n(); ++i) {
    const double d = v[i + 1] - v[i];
    sum += a[i] * d * d / h;
  }
  return sum;
}

/// y = K v where v^T K v = dirichlet_form(v).
inline std::vector<double> apply_stiffness(const RadialGrid& grid, std::span<const double> v) {
  const auto a = grid.face_areas();
  const double h = grid.h();
  std::vector<double> y(v.size(), 0.0);
  for (int i = 0; i + 1 < grid.n(); ++i) {
    const double flux = a[i] * (v[i + 1] - v[i]) / h;
    y[i] -= flux;
    y[i + 1] += flux;
  }
  return y;
}

inline double gradient_seminorm(const Field& u) {
  return std::sqrt(dirichlet_form(*u.grid, u.values));
}

struct FieldNorms {
  double d12 = 0.0;
  double l2 = 0.0;
  double lp = 0.0;
  double p = 2.0;
  double h1 = 0.0;
};

inline FieldNorms field_norms(const Field& u, double p) {
  require(p >= 1.0, ErrorCode::InvalidArgument, "L^p norm needs p >= 1");
  const auto w = u.grid->weights();
  double l2 = 0.0, lp = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    l2 += w[i] * a * a;
    lp += w[i] * std::pow(a, p);
  }
  FieldNorms n;
  n.p = p;
  n.d12 = gradient_seminorm(u);
  n.l2 = std::sqrt(l2);
  n.lp = std::pow(lp, 1.0 / p);
  n.h1 = std::sqrt(n.d12 * n.d12 + n.l2 * n.l2);
  return n;
}

}  // namespace kgm
