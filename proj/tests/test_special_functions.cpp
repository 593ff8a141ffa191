#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "subexp/errors.hpp"
#include "subexp/quadrature.hpp"
#include "subexp/special_functions.hpp"

using namespace subexp;

TEST_CASE("log_gamma against exact values and the libm oracle") {
  CHECK(log_gamma(1.0) == 0.0);
  CHECK(log_gamma(2.0) == 0.0);
  CHECK(log_gamma(0.5) == doctest::Approx(0.57236494292470008707).epsilon(1e-15));
  CHECK(log_gamma(10.0) == doctest::Approx(std::log(362880.0)).epsilon(1e-15));

  // geometric sweep of [1e-3, 1e6]; absolute bound where the value magnitude
  // keeps 1e-13 representable (one ulp of 1e3 is already 1.1e-13), a few-ulp
  // relative bound elsewhere
  for (int i = 0; i <= 180; ++i) {
    double x = 1e-3 * std::pow(10.0, 9.0 * i / 180.0);
    double got = log_gamma(x);
    double ref = std::lgamma(x);
    double eps = std::numeric_limits<double>::epsilon();
    CHECK(std::abs(got - ref) <=
          std::max(1e-13, 4.0 * eps * std::abs(ref)));
  }
}

TEST_CASE("signed log gamma covers negative arguments") {
  int sign = 0;
  double lg = log_gamma_signed(-0.5, sign);
  // Gamma(-1/2) = -2 sqrt(pi)
  CHECK(sign == -1);
  CHECK(lg == doctest::Approx(std::log(2.0 * std::sqrt(M_PI))).epsilon(1e-14));

  lg = log_gamma_signed(-1.5, sign);
  // Gamma(-3/2) = 4 sqrt(pi) / 3
  CHECK(sign == 1);
  CHECK(lg == doctest::Approx(std::log(4.0 * std::sqrt(M_PI) / 3.0)).epsilon(1e-13));

  for (double z : {-0.25, -1.75, -6.3, -20.2}) {
    double ref = std::tgamma(z);
    lg = log_gamma_signed(z, sign);
    CHECK(sign * std::exp(lg) == doctest::Approx(ref).epsilon(1e-11));
  }
}

TEST_CASE("reciprocal gamma vanishes exactly at the poles") {
  CHECK(rgamma(0.0) == 0.0);
  CHECK(rgamma(-1.0) == 0.0);
  CHECK(rgamma(-7.0) == 0.0);
  CHECK(rgamma(0.5) * std::tgamma(0.5) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rgamma(5.0) == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
  // continuity through the pole: Gamma(-1+e) ~ -1/e
  double e = 1e-8;
  CHECK(rgamma(-1.0 + e) == doctest::Approx(-e).epsilon(1e-6));
}

TEST_CASE("gamma_over_gamma handles poles and negative arguments") {
  CHECK(gamma_over_gamma(3.0, 5.0) == doctest::Approx(2.0 / 24.0).epsilon(1e-14));
  CHECK(gamma_over_gamma(1.0, 0.0) == 0.0);
  CHECK(gamma_over_gamma(1.0, -2.0) == 0.0);
  // Gamma(1/2)/Gamma(-1/2) = -1/2
  CHECK(gamma_over_gamma(0.5, -0.5) == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(gamma_over_gamma(-0.55, 0.25) ==
        doctest::Approx(std::tgamma(-0.55) / std::tgamma(0.25)).epsilon(1e-12));
  CHECK_THROWS_AS((void)gamma_over_gamma(-2.0, 1.0), subexp::domain_error);
}

TEST_CASE("gamma_ratio basics") {
  CHECK(gamma_ratio(3.0, 2.0) == doctest::Approx(12.0).epsilon(1e-13));
  CHECK(gamma_ratio(2.0, -0.5) ==
        doctest::Approx(0.88622692545275801365).epsilon(1e-13));
  CHECK(gamma_ratio(0.25, -0.8) ==
        doctest::Approx(std::tgamma(-0.55) / std::tgamma(0.25)).epsilon(1e-12));
  CHECK_THROWS_AS((void)gamma_ratio(1.0, -1.0), subexp::domain_error);
}

TEST_CASE("gamma_ratio cocycle identity") {
  // Gamma(x+c)/Gamma(x) * Gamma(x+c+d)/Gamma(x+c) = Gamma(x+c+d)/Gamma(x)
  std::vector<double> xs = {0.4, 1.0, 2.7, 17.0, 431.0, 9.5e4, 3.0e6};
  std::vector<std::pair<double, double>> cds = {
      {0.5, 0.25}, {-0.3, 1.4}, {2.0, -0.9}, {0.01, 0.02}};
  for (double x : xs)
    for (auto [c, d] : cds) {
      double lhs = gamma_ratio(x, c) * gamma_ratio(x + c, d);
      double rhs = gamma_ratio(x, c + d);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
    }
}

TEST_CASE("gamma_ratio large-argument behaviour") {
  // leading asymptotics Gamma(x+c)/Gamma(x) ~ x^c (1 + c(c-1)/(2x))
  double x = 100.0, c = 0.5;
  double approx = std::pow(x, c) * (1.0 + c * (c - 1.0) / (2.0 * x));
  CHECK(gamma_ratio(x, c) == doctest::Approx(approx).epsilon(1e-5));
  // agreement with libm on both sides of the internal switch to the
  // asymptotic branch (the log-difference loses ~x*eps, hence the 1e-10)
  for (double x0 : {9.99e3, 1.001e4, 2.0e4, 1e6})
    for (double c2 : {0.7, -0.4, 1.9}) {
      double ref = std::exp(std::lgamma(x0 + c2) - std::lgamma(x0));
      // the reference exponent is a difference of two ~ln Gamma(x0) numbers,
      // so grant it its own rounding noise
      double tol = std::max(1e-11, 8.0 * std::numeric_limits<double>::epsilon() *
                                       std::lgamma(x0));
      CHECK(gamma_ratio(x0, c2) == doctest::Approx(ref).epsilon(tol));
    }
  // Gamma(x+1)/Gamma(x) = x exactly, on both sides of the switch
  for (double x2 : {9.0e3, 9999.0, 10002.0, 1.0e5}) {
    CHECK(gamma_ratio(x2, 1.0) == doctest::Approx(x2).epsilon(1e-10));
  }
}

TEST_CASE("digamma and trigamma") {
  CHECK(digamma(1.0) == doctest::Approx(-euler_gamma).epsilon(1e-14));
  CHECK(digamma(0.5) ==
        doctest::Approx(-euler_gamma - 2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-14));
  CHECK(trigamma(0.5) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-14));

  // recurrences
  for (double z : {0.1, 0.9, 3.3, 41.0}) {
    CHECK(digamma(z + 1.0) ==
          doctest::Approx(digamma(z) + 1.0 / z).epsilon(1e-13));
    CHECK(trigamma(z + 1.0) ==
          doctest::Approx(trigamma(z) - 1.0 / (z * z)).epsilon(1e-13));
  }

  // derivative consistency with log_gamma / digamma by central differences
  for (double z : {0.7, 2.0, 12.0}) {
    double h = 1e-5 * z;
    double fd = (log_gamma(z + h) - log_gamma(z - h)) / (2.0 * h);
    CHECK(digamma(z) == doctest::Approx(fd).epsilon(1e-7));
    fd = (digamma(z + h) - digamma(z - h)) / (2.0 * h);
    CHECK(trigamma(z) == doctest::Approx(fd).epsilon(1e-7));
  }
}

static double lambert_bisect(double y) {
  // solve w e^w = y on the lower branch; h(w) = w e^w decreases from 0- to
  // -1/e as w runs from -inf up to -1, so bracket leftwards then bisect
  double hi = -1.0;
  while (hi * std::exp(hi) < y) hi *= 2.0;
  double a = hi, b = -1.0;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    if (m * std::exp(m) >= y)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

TEST_CASE("lambert W lower branch against bisection") {
  CHECK(lambert_w_minus1(-std::exp(-1.0)) == doctest::Approx(-1.0));
  for (double y : {-0.3, -0.1, -1e-3, -1e-8, -1e-15}) {
    double ref = lambert_bisect(y);
    CHECK(lambert_w_minus1(y) == doctest::Approx(ref).epsilon(1e-12));
  }
  // near the branch point
  for (int k = 4; k <= 40; k += 4) {
    double q = std::pow(2.0, -k);
    double y = (q - 1.0) / M_E;
    double w = lambert_w_minus1(y);
    CHECK(w <= -1.0);
    CHECK(w * std::exp(w) == doctest::Approx(y).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)lambert_w_minus1(0.1), subexp::domain_error);
  CHECK_THROWS_AS((void)lambert_w_minus1(-1.0), subexp::domain_error);
}

TEST_CASE("lambert W residual bound over random inputs") {
  std::mt19937_64 gen(20240817u);
  std::uniform_real_distribution<double> u(1.001, 700.0);
  for (int i = 0; i < 10000; ++i) {
    double y = -std::exp(-u(gen));
    double w = lambert_w_minus1(y);
    CHECK(std::abs(w * std::exp(w) - y) <= 1e-13 * std::abs(y));
  }
}

TEST_CASE("lambert W deep tail asymptotics") {
  double y = -1e-300;
  double L1 = std::log(-y), L2 = std::log(-L1);
  double w = lambert_w_minus1(y);
  CHECK(std::abs(w - (L1 - L2)) < 2.0 * std::abs(L2 / L1) * std::abs(L1));
  CHECK(w < -690.0);
  CHECK(std::abs(w - (L1 - L2 + L2 / L1)) < 1e-3);
}

TEST_CASE("exponential integral E1") {
  CHECK(exp_integral_e1(1.0) ==
        doctest::Approx(0.21938393439552027368).epsilon(1e-14));
  // quadrature oracle at several points across the series/fraction switch
  for (double x : {0.05, 0.4, 0.999, 1.001, 2.5, 8.0, 30.0}) {
    auto r = quad::integrate_tail(
        [](double v) { return std::exp(-v) / v; }, x);
    REQUIRE(r.converged);
    CHECK(exp_integral_e1(x) == doctest::Approx(r.value).epsilon(1e-10));
  }
  // small-x expansion
  double x = 1e-6;
  CHECK(exp_integral_e1(x) ==
        doctest::Approx(-euler_gamma - std::log(x) + x).epsilon(1e-12));
  CHECK_THROWS_AS((void)exp_integral_e1(0.0), subexp::domain_error);
}

TEST_CASE("incomplete beta difference identity") {
  // int_0^1 (1-u^x) u^{a-1} (1-u)^{b-1} du / Gamma(b)
  //   = Gamma(a)/Gamma(a+b) - Gamma(x+a)/Gamma(x+a+b)
  auto [l0, r0] = beta_tail_identity(1.0, 1.0, 2.0);
  CHECK(l0 == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(r0 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  std::vector<std::array<double, 3>> cases = {
      {1.0, 1.0, 2.0},  {2.0, -0.5, 3.0},  {0.7, 0.3, 1.0},
      {1.5, -0.9, 0.4}, {3.0, 2.5, 10.0},  {0.2, -0.2, 5.0},
      {5.0, -0.99, 2.0}};
  for (auto [a, b, x] : cases) {
    auto [lhs, rhs] = beta_tail_identity(a, b, x);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
  }

  auto [lz, rz] = beta_tail_identity(1.3, 0.4, 0.0);
  CHECK(lz == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rz == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)beta_tail_identity(1.0, 0.0, 1.0), subexp::domain_error);
}
