#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "subexp/quadrature.hpp"

using namespace subexp;

TEST_CASE("smooth integrals on finite intervals") {
  auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));

  r = quad::integrate([](double x) { return std::exp(x); }, -1.0, 1.0);
  CHECK(r.value == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("integrable endpoint singularities") {
  // int_0^1 x^{-1/2} dx = 2; nodes are interior so the endpoint is never hit
  auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));

  r = quad::integrate([](double x) { return std::log(x); }, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("tail substitution") {
  auto r = quad::integrate_tail([](double v) { return std::exp(-v); }, 2.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(std::exp(-2.0)).epsilon(1e-11));

  // slowly decaying but integrable: int_1^inf v^{-2} dv = 1
  r = quad::integrate_tail([](double v) { return 1.0 / (v * v); }, 1.0);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("positive axis composites") {
  auto r = quad::integrate_positive_axis([](double v) { return std::exp(-v); });
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-11));

  // Gamma(1/2) = sqrt(pi), singular at 0 and slow tail
  r = quad::integrate_positive_axis(
      [](double v) { return std::exp(-v) / std::sqrt(v); });
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-9));

  // Gamma(5) = 24
  r = quad::integrate_positive_axis(
      [](double v) { return std::pow(v, 4) * std::exp(-v); });
  CHECK(r.value == doctest::Approx(24.0).epsilon(1e-10));
}

TEST_CASE("divergent integrals are flagged, not silently returned") {
  auto r = quad::integrate_tail([](double v) { return 1.0 / v; }, 1.0);
  CHECK(!r.converged);
  CHECK_THROWS_AS(quad::integrate_checked([](double v) { return 1.0 / v; }, 0.0,
                                          1.0, quad::Options{}, "1/v near 0"),
                  subexp::numeric_error);
}

TEST_CASE("requested tolerances are honoured") {
  quad::Options loose;
  loose.rel_tol = 1e-4;
  auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0,
                           1.0, loose);
  CHECK(r.converged);
  CHECK(std::abs(r.value - 2.0) < 1e-3);
  quad::Options tight;
  tight.rel_tol = 1e-12;
  auto r2 = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0,
                            1.0, tight);
  CHECK(std::abs(r2.value - 2.0) < std::abs(r.value - 2.0) + 1e-14);
  CHECK(r2.evaluations > r.evaluations);
}
