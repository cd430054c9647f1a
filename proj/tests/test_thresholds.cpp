#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"

#include "kgm/thresholds.hpp"

using namespace kgm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("coefficients") {
  const auto t = coefficients(3.0, 0.0);
  CHECK_THAT(t.a, WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(t.b, WithinAbs(-1.0 / 6.0, 1e-15));
  CHECK_THAT(t.c, WithinAbs(1.0 / 6.0, 1e-15));
  CHECK_THAT(t.a + t.b, WithinAbs(t.c, 1e-15));

  const double alpha = (4.0 - 3.5) / (24.0 - 35.0);
  CHECK_THAT(alpha, WithinAbs(-1.0 / 22.0, 1e-15));
  CHECK_THAT(coefficients(3.5, alpha).b, WithinAbs(0.0, 1e-15));

  CHECK_THROWS_AS(coefficients(2.0, 0.0), Error);
  CHECK_THROWS_AS(coefficients(6.0, 0.0), Error);
}

TEST_CASE("A + B = C on random (p, alpha)") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> P(2.0 + 1e-9, 6.0), A(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const auto t = coefficients(P(rng), A(rng));
    worst = std::max(worst, std::abs(t.a + t.b - t.c));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("A and C positive on I_p") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> P(2.0 + 1e-9, 4.0 - 1e-9), U(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double p = P(rng);
    const auto I = interval_Ip(p);
    const double alpha = I.lo + (I.hi - I.lo) * U(rng);
    if (!I.contains(alpha)) continue;
    const auto t = coefficients(p, alpha);
    CHECK(t.a > 0.0);
    CHECK(t.c > 0.0);
  }
}

TEST_CASE("gradient coefficient") {
  CHECK_THAT(gradient_coefficient(3.0, 0.0), WithinAbs(1.0 / 6.0, 1e-15));
  for (double p : {2.2, 2.5, 3.0, 3.7}) {
    const double edge = (2.0 - p) / (2.0 * (6.0 - p));
    CHECK(gradient_coefficient(p, edge + 1e-6) > 0.0);
    CHECK(gradient_coefficient(p, edge - 1e-6) < 0.0);
  }
}

TEST_CASE("interval I_p") {
  const auto i3 = interval_Ip(3.0);
  CHECK_THAT(i3.lo, WithinAbs(-1.0 / 6.0, 1e-15));
  CHECK_THAT(i3.hi, WithinAbs(1.0 / 6.0, 1e-15));
  const auto i25 = interval_Ip(2.5);
  CHECK_THAT(i25.lo, WithinAbs(-1.0 / 14.0, 1e-15));
  CHECK(std::abs(interval_Ip(2.0 + 1e-9).lo) < 1e-9);
  CHECK_FALSE(i3.contains(-1.0 / 6.0));
  CHECK_THROWS_AS(interval_Ip(4.0), Error);
}

TEST_CASE("K_p") {
  // K_3 at the (excluded) lower endpoint, approached from inside
  CHECK_THAT(kp(3.0, -1.0 / 6.0 + 1e-13), WithinAbs(1.0, 1e-12));
  CHECK_THAT(kp(3.0, 0.0), WithinAbs(1.125, 1e-15));
  CHECK_THROWS_AS(kp(3.0, 0.2), Error);
  CHECK_THROWS_AS(kp(3.0, -1.0 / 6.0), Error);

  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> P(2.01, 3.99), U(0.001, 0.999);
  for (int k = 0; k < 100; ++k) {
    const double p = P(rng);
    const auto I = interval_Ip(p);
    const double alpha = I.lo + (I.hi - I.lo) * U(rng);
    CHECK_THAT(kp(p, alpha), WithinRel(kp_quotient(p, alpha), 1e-12));
  }
}

TEST_CASE("inf K_p closed form against brute force") {
  CHECK_THAT(inf_kp(3.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(inf_kp(2.5), WithinAbs(4.0 / 3.0, 1e-15));
  for (int k = 1; k <= 10; ++k) {
    const double p = 2.0 + 0.1 * k;
    const auto I = interval_Ip(p);
    double best = INFINITY;
    constexpr int N = 1000000;
    for (int j = 1; j < N; ++j) best = std::min(best, kp(p, I.lo + (I.hi - I.lo) * j / N));
    CHECK_THAT(best, WithinRel(inf_kp(p), 1e-5));
  }
  CHECK_THROWS_AS(inf_kp(3.5), Error);
}

TEST_CASE("K_3 increasing, H1 and H2 positive and increasing") {
  double prev = -INFINITY;
  for (int k = 1; k < 100000; ++k) {
    const double v = kp(3.0, -1.0 / 6.0 + (1.0 / 3.0) * k / 100000.0);
    CHECK(v > prev);
    prev = v;
  }
  for (double p : {2.05, 2.3, 2.6, 2.95}) {
    const auto I = interval_Ip(p);
    double p1 = -INFINITY, p2 = -INFINITY;
    for (int k = 1; k < 10000; ++k) {
      const double a = I.lo + (I.hi - I.lo) * k / 10000.0;
      const double h1 = h1_factor(a), h2 = h2_factor(p, a);
      REQUIRE(h1 > 0.0);
      REQUIRE(h2 > 0.0);
      REQUIRE(h1 > p1);
      REQUIRE(h2 > p2);
      p1 = h1;
      p2 = h2;
    }
  }
}

TEST_CASE("g and g0") {
  CHECK(g(3.5) == 1.0);
  CHECK(g(3.0) == 1.0);
  CHECK_THAT(g(2.5), WithinAbs(std::sqrt(0.75), 1e-15));
  CHECK_THAT(g0(4.0), WithinAbs(1.0, 1e-15));
  for (int k = 1; k < 1000; ++k) {
    const double p = 2.0 + 2.0 * k / 1000.0;
    CHECK(g(p) >= g0(p));
    if (p < 3.0) CHECK(g(p) > g0(p));
  }
  for (int k = 1; k <= 1000; ++k) {
    const double p = 2.0 + k / 1000.0;
    CHECK_THAT(g(p) * g(p) * inf_kp(p), WithinAbs(1.0, 1e-12));
  }
  CHECK_THROWS_AS(g(4.0), Error);
  CHECK_THROWS_AS(g0(4.5), Error);
}

TEST_CASE("find_alpha") {
  CHECK_THAT(find_alpha(3.5, 1.0, 0.9), WithinAbs(-1.0 / 22.0, 1e-15));
  CHECK(interval_Ip(3.5).contains(find_alpha(3.5, 1.0, 0.9)));

  const double a = find_alpha(2.5, 1.0, 0.5);
  CHECK(interval_Ip(2.5).contains(a));
  CHECK(kp(2.5, a) <= 4.0);
  CHECK(check_quadratic_nonneg(2.5, a, 1.0, 0.5).passed);

  CHECK_THROWS_AS(find_alpha(2.5, 1.0, 0.9), Error);
  try {
    find_alpha(2.5, 1.0, 0.9);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoAlpha);
  }
  // p = 3 belongs to the bisection branch
  const double a3 = find_alpha(3.0, 1.0, 0.9);
  CHECK(kp(3.0, a3) <= 1.0 / 0.81);
}

TEST_CASE("quadratic certificate") {
  const double b0 = -1.0 / 22.0;
  for (double omega : {0.1, 0.5, 0.99}) {
    const auto c = check_quadratic_nonneg(3.5, b0, 1.0, omega);
    CHECK(c.passed);
    CHECK(c.grid_passed);
    CHECK(c.agree);
  }
  const auto ok = check_quadratic_nonneg(2.5, find_alpha(2.5, 1.0, 0.5), 1.0, 0.5);
  CHECK(ok.passed);
  CHECK(ok.agree);

  const auto bad = check_quadratic_nonneg(2.5, 1.0 / 6.0 - 1e-4, 1.0, 0.86);
  CHECK_FALSE(bad.passed);
  CHECK_FALSE(bad.grid_passed);
  REQUIRE(bad.witness.has_value());
  CHECK(*bad.witness > 0.0);
  CHECK(*bad.witness < 0.86);
}

TEST_CASE("certificate holds iff K_p <= m^2/omega^2") {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> P(2.05, 3.0), U(0.0, 1.0), W(0.05, 0.99);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const double p = P(rng);
    const auto I = interval_Ip(p);
    const double alpha = I.lo + (I.hi - I.lo) * (1e-6 + (1.0 - 2e-6) * U(rng));
    const double omega = W(rng);
    const double K = kp(p, alpha), target = 1.0 / (omega * omega);
    if (std::abs(K - target) < 1e-9 * target) continue;
    CHECK(check_quadratic_nonneg(p, alpha, 1.0, omega, 2001).passed == (K <= target));
    ++checked;
  }
  CHECK(checked > 1900);
}

TEST_CASE("classifier truth table") {
  CHECK(classify_existence(2.5, 0.8) == Region::ExistenceThm1);
  CHECK(classify_existence(6.0, 0.9) == Region::Nonexistence);
  CHECK(classify_existence(2.5, 0.95) == Region::Unknown);
  CHECK(classify_existence(4.0, 0.5) == Region::ExistenceDM);
  CHECK(classify_existence(4.5, 0.9) == Region::ExistenceBF);
  CHECK(classify_existence(2.0, 0.5) == Region::Nonexistence);

  CHECK(classify_existence(3.0, 0.999) == Region::ExistenceThm1);
  CHECK(classify_existence(4.5, 1.0) == Region::Unknown);
  CHECK(classify_existence(7.0, 1.0) == Region::Nonexistence);
  CHECK(classify_existence(7.0, 1.2) == Region::Unknown);
  CHECK_THROWS_AS(classify_existence(3.0, 0.0), Error);
}

TEST_CASE("threshold report") {
  const auto r = threshold_report(3.0, 1.0, 0.9);
  CHECK(r.region == Region::ExistenceThm1);
  REQUIRE(r.inf_kp);
  CHECK(*r.inf_kp == 1.0);
  REQUIRE(r.alpha_star);
  REQUIRE(r.certificate);
  CHECK(r.certificate->passed);

  const auto s = threshold_report(3.5, 1.0, 0.99);
  REQUIRE(s.alpha_star);
  CHECK_THAT(*s.alpha_star, WithinAbs(-1.0 / 22.0, 1e-15));
  CHECK(s.certificate->passed);
  CHECK_FALSE(s.inf_kp);

  const auto u = threshold_report(4.5, 1.0, 0.9);
  CHECK(u.region == Region::ExistenceBF);
  CHECK_FALSE(u.g_of_p);
  CHECK_FALSE(u.alpha_star);
}
