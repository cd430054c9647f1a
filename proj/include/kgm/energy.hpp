#pragma once

// Reduced functionals and the identities used as constraints or diagnostics.
//
// Standard mode (lambda in (0,1], power law):
//   I_lambda(u) = 1/2 int |grad u|^2 + Omega u^2 + e omega phi_u u^2 - lambda int |u|^p / p
// Zero-mass mode (eps >= 0, double-power law):
//   I_eps(u)    = 1/2 int |grad u|^2 + eps u^2 + e omega phi_u u^2 - int f(u)
//
// The interaction term enters with e omega / 2. This is what the two-field
// action S(u, phi) reduces to once the electrostatic identity is substituted;
// two_field_action() evaluates S directly and the tests hold both routes
// against each other and against finite differences of the gradient.

#include <cmath>
#include <string>

#include "kgm/error.hpp"
#include "kgm/model.hpp"
#include "kgm/phi_reduction.hpp"
#include "kgm/thresholds.hpp"

namespace kgm {

class Mode {
 public:
  enum class Kind { standard, zero_mass };

  static Mode standard(double lambda) {
    require(std::isfinite(lambda) && lambda > 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument,
            "lambda must lie in (0, 1], got " + std::to_string(lambda));
    return Mode(Kind::standard, lambda);
  }
  static Mode zero_mass(double eps) {
    require(std::isfinite(eps) && eps >= 0.0, ErrorCode::InvalidArgument,
            "eps must be >= 0, got " + std::to_string(eps));
    return Mode(Kind::zero_mass, eps);
  }

  Kind kind() const { return kind_; }
  bool is_standard() const { return kind_ == Kind::standard; }
  /// lambda in standard mode, eps in zero-mass mode.
  double parameter() const { return value_; }

  /// Coefficient of the linear term: Omega or eps.
  double mass(const ModelParams& params) const {
    return is_standard() ? params.Omega() : value_;
  }
  /// Scaling of the nonlinear potential.
  double lambda() const { return is_standard() ? value_ : 1.0; }

  void check(const ModelParams& params) const {
    params.validate();
    if (is_standard()) {
      require(params.nonlinearity.is_power(), ErrorCode::InvalidArgument,
              "standard mode needs the power nonlinearity");
    } else {
      require(params.nonlinearity.is_double_power(), ErrorCode::InvalidArgument,
              "zero-mass mode needs the double-power nonlinearity");
    }
  }

  std::string describe() const {
    return is_standard() ? "standard(lambda=" + std::to_string(value_) + ")"
                         : "zero_mass(eps=" + std::to_string(value_) + ")";
  }

 private:
  Mode(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_;
  double value_;
};

struct EnergyBreakdown {
  double kinetic = 0.0;      ///< 1/2 int |grad u|^2
  double mass_term = 0.0;    ///< 1/2 Omega int u^2  (or 1/2 eps int u^2)
  double interaction = 0.0;  ///< (e omega / 2) int phi_u u^2
  double potential = 0.0;    ///< lambda int F(u)
  double total = 0.0;
};

/// Raw integrals every identity is assembled from.
struct IdentityTerms {
  double grad2 = 0.0;      ///< int |grad u|^2
  double mass2 = 0.0;      ///< int u^2
  double phi_u2 = 0.0;     ///< int phi u^2
  double phi2_u2 = 0.0;    ///< int phi^2 u^2
  double potential = 0.0;  ///< int F(u)
  double fprime_u = 0.0;   ///< int f'(u) u
};

inline IdentityTerms identity_terms(const Field& u, const Field& phi, const Nonlinearity& nl) {
  require_same_grid(u, phi);
  IdentityTerms t;
  const auto w = u.grid->weights();
  t.grad2 = dirichlet_form(*u.grid, u.values);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double u2 = u[i] * u[i];
    const auto fv = nl.eval(u[i]);
    t.mass2 += w[i] * u2;
    t.phi_u2 += w[i] * phi[i] * u2;
    t.phi2_u2 += w[i] * phi[i] * phi[i] * u2;
    t.potential += w[i] * fv.f;
    t.fprime_u += w[i] * fv.fprime * u[i];
  }
  return t;
}

struct Evaluation {
  EnergyBreakdown energy;
  PhiSolution phi;
  IdentityTerms terms;
  Field gradient;  ///< empty unless requested
};

/// One pass: potential solve, energy and (optionally) the nodal gradient
///   g = -Laplace(u) + (mass + 2 e omega phi - e^2 phi^2) u - lambda f'(u),
/// scaled so that weighted_dot(g, v) is the exact directional derivative of
/// the discrete energy.
inline Evaluation evaluate(const Field& u, const ModelParams& params, const Mode& mode,
                           bool with_gradient = true) {
  mode.check(params);
  Evaluation ev;
  ev.phi = solve_phi(u, params);
  const Field& phi = ev.phi.phi;
  ev.terms = identity_terms(u, phi, params.nonlinearity);

  const double mass = mode.mass(params);
  const double lambda = mode.lambda();
  const double e = params.e, omega = params.omega;

  ev.energy.kinetic = 0.5 * ev.terms.grad2;
  ev.energy.mass_term = 0.5 * mass * ev.terms.mass2;
  ev.energy.interaction = 0.5 * e * omega * ev.terms.phi_u2;
  ev.energy.potential = lambda * ev.terms.potential;
  ev.energy.total =
      ev.energy.kinetic + ev.energy.mass_term + ev.energy.interaction - ev.energy.potential;

  if (with_gradient) {
    const auto w = u.grid->weights();
    std::vector<double> ku = apply_stiffness(*u.grid, u.values);
    ev.gradient = Field(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double potential = mass + 2.0 * e * omega * phi[i] - e * e * phi[i] * phi[i];
      ev.gradient[i] = ku[i] / w[i] + potential * u[i] - lambda * params.nonlinearity.eval(u[i]).fprime;
    }
  }
  return ev;
}

inline EnergyBreakdown reduced_energy(const Field& u, const ModelParams& params, const Mode& mode) {
  return evaluate(u, params, mode, false).energy;
}

inline Field reduced_gradient(const Field& u, const ModelParams& params, const Mode& mode) {
  return evaluate(u, params, mode, true).gradient;
}

/// S(u, phi) = 1/2 int |grad u|^2 - |grad phi|^2 + [mass + 2 e omega phi - e^2 phi^2] u^2
///             - lambda int F(u),
/// evaluated for an arbitrary potential. Only used as a cross-check.
inline double two_field_action(const Field& u, const Field& phi, const ModelParams& params,
                               const Mode& mode) {
  mode.check(params);
  const IdentityTerms t = identity_terms(u, phi, params.nonlinearity);
  const double e = params.e, omega = params.omega;
  return 0.5 * t.grad2 - 0.5 * potential_dirichlet_form(*u.grid, phi.values) +
         0.5 * (mode.mass(params) * t.mass2 + 2.0 * e * omega * t.phi_u2 - e * e * t.phi2_u2) -
         mode.lambda() * t.potential;
}

/// Weighted L2 norm of the nodal gradient over the free nodes (the last node
/// is pinned by the boundary condition).
inline double gradient_norm(const Field& g) {
  const auto w = g.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) s += w[i] * g[i] * g[i];
  return std::sqrt(s);
}

struct IdentityResiduals {
  double nehari = 0.0;
  double pohozaev = 0.0;
  double gradient_norm = 0.0;
};

inline double nehari_residual(const IdentityTerms& t, const ModelParams& params, const Mode& mode) {
  const double e = params.e, omega = params.omega;
  const double lhs = t.grad2 + mode.mass(params) * t.mass2 + 2.0 * e * omega * t.phi_u2 -
                     e * e * t.phi2_u2;
  const double rhs = mode.lambda() * t.fprime_u;
  return std::abs(lhs - rhs) / std::max(1.0, rhs);
}

/// Signed dilation combination
///   int |grad u|^2 + 3 mass u^2 + 5 e omega phi u^2 - 2 e^2 phi^2 u^2 - 6 lambda F(u),
/// which equals 2 d/ds I(u(./s)) at s = 1.
inline double pohozaev_combination(const IdentityTerms& t, const ModelParams& params,
                                   const Mode& mode) {
  const double e = params.e, omega = params.omega;
  return t.grad2 + 3.0 * mode.mass(params) * t.mass2 + 5.0 * e * omega * t.phi_u2 -
         2.0 * e * e * t.phi2_u2 - 6.0 * mode.lambda() * t.potential;
}

inline double pohozaev_residual(const IdentityTerms& t, const ModelParams& params,
                                const Mode& mode) {
  const double e = params.e, omega = params.omega;
  const double scale = t.grad2 + 3.0 * mode.mass(params) * t.mass2 +
                       5.0 * e * omega * t.phi_u2 + 2.0 * e * e * t.phi2_u2 +
                       6.0 * mode.lambda() * t.potential;
  return std::abs(pohozaev_combination(t, params, mode)) / std::max(1.0, scale);
}

inline double nehari_residual(const Field& u, const ModelParams& params, const Mode& mode) {
  require(!u.is_zero(), ErrorCode::ZeroField, "Nehari residual is undefined at u = 0");
  const auto ev = evaluate(u, params, mode, false);
  return nehari_residual(ev.terms, params, mode);
}

inline double pohozaev_residual(const Field& u, const ModelParams& params, const Mode& mode) {
  if (u.is_zero()) return 0.0;
  const auto ev = evaluate(u, params, mode, false);
  return pohozaev_residual(ev.terms, params, mode);
}

inline IdentityResiduals identity_residuals(const Evaluation& ev, const ModelParams& params,
                                            const Mode& mode) {
  IdentityResiduals r;
  r.nehari = nehari_residual(ev.terms, params, mode);
  r.pohozaev = pohozaev_residual(ev.terms, params, mode);
  r.gradient_norm = ev.gradient.grid ? gradient_norm(ev.gradient) : NAN;
  return r;
}

/// Left-hand side of the a-priori estimate obtained by combining the energy
/// level, the Pohozaev identity (times alpha) and the Nehari identity (times
/// (1-6 alpha)/p):
///   G int |grad u|^2 + int [C Omega + B e omega phi_u + A e^2 phi_u^2] u^2,
/// with G = (p - 2 alpha p - 2 + 12 alpha)/(2p). At a critical point of I_lambda
/// it equals the energy level; the integrand is nonnegative whenever the
/// quadratic certificate holds, so it bounds int |grad u|^2 by level / G.
inline double boundedness_certificate(const Field& u, const ModelParams& params, double lambda,
                                      double alpha) {
  const double p = params.nonlinearity.p();
  require_alpha_in_Ip(p, alpha);
  (void)Mode::standard(lambda);
  if (u.is_zero()) return 0.0;
  const auto phi = solve_phi(u, params).phi;
  const auto t = coefficients(p, alpha);
  const double e = params.e, omega = params.omega, Omega = params.Omega();
  const auto w = u.grid->weights();
  double bulk = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ephi = e * phi[i];
    bulk += w[i] * (t.c * Omega + t.b * omega * ephi + t.a * ephi * ephi) * u[i] * u[i];
  }
  return gradient_coefficient(p, alpha) * dirichlet_form(*u.grid, u.values) + bulk;
}

}  // namespace kgm
