#include <cmath>
#include <random>

#include <boost/math/tools/roots.hpp>

#include "catch_amalgamated.hpp"

#include "kgm/energy.hpp"

using namespace kgm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams power_params(double p, double omega = 0.5, double e = 1.0) {
  ModelParams prm;
  prm.omega = omega;
  prm.e = e;
  prm.nonlinearity = Nonlinearity::power(p);
  return prm;
}

ModelParams zero_mass_params() {
  ModelParams prm;
  prm.m = 1.0;
  prm.omega = 1.0;
  prm.e = 1.0;
  prm.nonlinearity = Nonlinearity::double_power(5.0, 7.0, 5.0);
  return prm;
}

Field random_smooth(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> A(0.2, 2.0), W(1.0, 4.0), C(0.0, 3.0);
  const double a1 = A(rng), w1 = W(rng), a2 = A(rng), w2 = W(rng), c2 = C(rng);
  Field f = sample(g, [&](double r) {
    return a1 * std::exp(-r * r / (w1 * w1)) + 0.3 * a2 * std::exp(-(r - c2) * (r - c2) / (w2 * w2));
  });
  f[f.size() - 1] = 0.0;
  return f;
}

double directional_fd(const Field& u, const Field& v, const ModelParams& prm, const Mode& mode) {
  const double t = 1e-5;
  return (reduced_energy(axpy(u, t, v), prm, mode).total - reduced_energy(axpy(u, -t, v), prm, mode).total) /
         (2.0 * t);
}

}  // namespace

TEST_CASE("zero field") {
  const auto g = make_grid(500, 20.0);
  const auto prm = power_params(3.0);
  CHECK(reduced_energy(Field(g), prm, Mode::standard(1.0)).total == 0.0);
  CHECK(reduced_gradient(Field(g), prm, Mode::standard(1.0)).is_zero());
  CHECK(pohozaev_residual(Field(g), prm, Mode::standard(1.0)) == 0.0);
  CHECK_THROWS_AS(nehari_residual(Field(g), prm, Mode::standard(1.0)), Error);
  CHECK(boundedness_certificate(Field(g), prm, 1.0, 0.0) == 0.0);
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(42);
  const auto g = make_grid(400, 20.0);
  struct Case {
    ModelParams prm;
    Mode mode;
  };
  const std::vector<Case> cases = {
      {power_params(3.0), Mode::standard(1.0)},
      {power_params(2.5, 0.8, 2.0), Mode::standard(0.5)},
      {power_params(4.5, 0.3, 0.7), Mode::standard(0.75)},
      {zero_mass_params(), Mode::zero_mass(0.25)},
      {zero_mass_params(), Mode::zero_mass(0.0)},
  };
  for (const auto& c : cases) {
    for (int k = 0; k < 5; ++k) {
      const Field u = random_smooth(g, rng);
      const Field v = random_smooth(g, rng);
      const double exact = weighted_dot(reduced_gradient(u, c.prm, c.mode), v);
      CHECK_THAT(directional_fd(u, v, c.prm, c.mode), WithinRel(exact, 1e-6));
    }
  }
}

TEST_CASE("reduced energy equals the two-field action at the potential") {
  std::mt19937_64 rng(3);
  const auto g = make_grid(1000, 30.0);
  const auto prm = power_params(3.0, 0.6, 1.5);
  const auto mode = Mode::standard(1.0);
  for (int k = 0; k < 5; ++k) {
    const Field u = random_smooth(g, rng);
    const auto phi = solve_phi(u, prm).phi;
    const double I = reduced_energy(u, prm, mode).total;
    CHECK_THAT(two_field_action(u, phi, prm, mode), WithinAbs(I, 1e-10 * std::max(1.0, std::abs(I))));
    // the action is concave in phi with its maximum at phi_u
    Field off = phi;
    for (double& x : off.values) x *= 0.9;
    CHECK(two_field_action(u, off, prm, mode) < I);
  }
}

TEST_CASE("small amplitude energy is positive and quadratic") {
  const auto g = make_grid(1000, 30.0);
  for (double p : {2.5, 3.0, 4.5}) {
    const auto prm = power_params(p);
    Field u = sample(g, [](double r) { return std::exp(-r * r / 4.0); });
    u[u.size() - 1] = 0.0;
    const double Q = dirichlet_form(*g, u.values) + prm.Omega() * weighted_dot(u, u);
    // I(a u) / a^2 - Q/2 = O(a^k): quartic from the potential, a^(p-2) from F
    auto defect = [&](double a) {
      const double I = reduced_energy(a * u, prm, Mode::standard(1.0)).total;
      CHECK(I > 0.0);
      return std::abs(I / (a * a) - 0.5 * Q) / (0.5 * Q);
    };
    const double k = std::min(2.0, p - 2.0);
    const double d2 = defect(1e-2), d3 = defect(1e-3), d4 = defect(1e-4);
    CHECK(d2 < 0.5);
    CHECK_THAT(std::log10(d3 / d4), WithinAbs(k, 0.1));
    CHECK_THAT(std::log10(d2 / d3), WithinAbs(k, 0.1));
  }
}

TEST_CASE("energy decreases in lambda for a fixed field") {
  std::mt19937_64 rng(5);
  const auto g = make_grid(500, 20.0);
  const auto prm = power_params(3.0);
  const Field u = random_smooth(g, rng);
  double prev = INFINITY;
  for (double lambda : {0.5, 0.6, 0.75, 0.9, 1.0}) {
    const double I = reduced_energy(u, prm, Mode::standard(lambda)).total;
    CHECK(I < prev);
    prev = I;
  }
}

TEST_CASE("Nehari residual vanishes on the fibering maximum") {
  std::mt19937_64 rng(11);
  const auto g = make_grid(1000, 30.0);
  for (const auto& prm : {power_params(3.0), power_params(2.5, 0.8), power_params(4.5, 0.4)}) {
    const auto mode = Mode::standard(1.0);
    const Field u = random_smooth(g, rng);
    CHECK(nehari_residual(u, prm, mode) > 0.0);
    auto slope = [&](double t) { return weighted_dot(reduced_gradient(t * u, prm, mode), u); };
    double lo = 1e-3, hi = 1.0;
    while (slope(hi) > 0.0) hi *= 2.0;
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        slope, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    CHECK(nehari_residual(0.5 * (a + b) * u, prm, mode) < 1e-8);
  }
}

TEST_CASE("Pohozaev combination is twice the dilation derivative") {
  const auto g = make_grid(4000, 40.0);
  for (const auto& prm : {power_params(3.0), power_params(4.5, 0.3, 2.0)}) {
    const auto mode = Mode::standard(1.0);
    auto dilated = [&](double s) {
      Field f = sample(g, [&](double r) { return 1.5 * std::exp(-(r / s) * (r / s) / 6.0); });
      f[f.size() - 1] = 0.0;
      return f;
    };
    const double ds = 1e-4;
    const double dI = (reduced_energy(dilated(1.0 + ds), prm, mode).total -
                       reduced_energy(dilated(1.0 - ds), prm, mode).total) /
                      (2.0 * ds);
    const auto ev = evaluate(dilated(1.0), prm, mode, false);
    CHECK_THAT(0.5 * pohozaev_combination(ev.terms, prm, mode), WithinRel(dI, 1e-4));
  }
}

TEST_CASE("zero-mass mode") {
  const auto g = make_grid(500, 20.0);
  const auto prm = zero_mass_params();
  Field u = sample(g, [](double r) { return std::exp(-r * r / 4.0); });
  u[u.size() - 1] = 0.0;
  const auto e0 = reduced_energy(u, prm, Mode::zero_mass(0.0));
  const auto e1 = reduced_energy(u, prm, Mode::zero_mass(0.5));
  CHECK(e0.mass_term == 0.0);
  CHECK_THAT(e1.mass_term, WithinRel(0.25 * weighted_dot(u, u), 1e-14));
  CHECK_THROWS_AS(reduced_energy(u, power_params(3.0), Mode::zero_mass(0.5)), Error);
  CHECK_THROWS_AS(reduced_energy(u, prm, Mode::standard(1.0)), Error);
  CHECK_THROWS_AS(Mode::zero_mass(-1.0), Error);
  CHECK_THROWS_AS(Mode::standard(0.0), Error);
  CHECK_THROWS_AS(Mode::standard(1.5), Error);
}

TEST_CASE("boundedness certificate") {
  CHECK_THAT(gradient_coefficient(3.0, 0.0), WithinAbs(1.0 / 6.0, 1e-15));
  const auto g = make_grid(500, 20.0);
  const auto prm = power_params(3.0);
  Field u = sample(g, [](double r) { return std::exp(-r * r / 4.0); });
  u[u.size() - 1] = 0.0;
  CHECK(boundedness_certificate(u, prm, 1.0, 0.0) > 0.0);
  CHECK_THROWS_AS(boundedness_certificate(u, prm, 1.0, 0.2), Error);
  CHECK_THROWS_AS(boundedness_certificate(u, prm, 0.0, 0.0), Error);
}
