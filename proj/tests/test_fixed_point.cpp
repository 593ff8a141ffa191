#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "subexp/asymptotics.hpp"
#include "subexp/errors.hpp"
#include "subexp/fixed_point.hpp"
#include "subexp/levy_model.hpp"
#include "subexp/psi.hpp"
#include "subexp/quadrature.hpp"

using namespace subexp;

namespace {

// pi = e^{-u}du: phi(x) = x/(1+x), psi(t) = t-1, and the iteration limit is
// f'(x) = x/(1+x) with density x e^{-x} (moments (n+1)! are the Gamma(2,1)
// moments, and x e^{-x} solves the tail integral equation in closed form)
const GridFunction& exp_fp256() {
  static GridFunction g = iterate_to_fprime(
      *make_compound_poisson_exponential(), {1e-2, 100.0, 256}, 0.5, 1e-6, 200);
  return g;
}

const GridFunction& exp_fp512() {
  static GridFunction g = iterate_to_fprime(
      *make_compound_poisson_exponential(), {1e-2, 60.0, 512}, 0.5, 1e-6, 200);
  return g;
}

}  // namespace

TEST_CASE("constant grid construction and evaluation zones") {
  auto g = make_constant_grid({1.0, 100.0, 64}, 0.5);
  REQUIRE(g.size() == 64);
  CHECK(g.grid.front() == 1.0);
  CHECK(g.grid.back() == 100.0);
  // geometric spacing: constant ratio
  const double r0 = g.grid[1] / g.grid[0];
  for (std::size_t i = 2; i < g.size(); ++i)
    CHECK(g.grid[i] / g.grid[i - 1] == doctest::Approx(r0).epsilon(1e-12));
  CHECK(g.value_at(0.2) == 0.5);    // constant to the left
  CHECK(g.value_at(7.3) == 0.5);    // interior
  CHECK(g.value_at(5000.0) == 0.5); // flat extrapolation of a constant

  // interior evaluation is linear between nodes
  GridFunction h = g;
  for (std::size_t i = 0; i < h.size(); ++i) h.values[i] = 3.0 * h.grid[i];
  h.right_exponent = 1.0;
  const double xm = 0.5 * (h.grid[10] + h.grid[11]);
  CHECK(h.value_at(xm) == doctest::Approx(3.0 * xm).epsilon(1e-14));
  // pinned power extrapolation: value scales like (x/x_hi)^p
  CHECK(h.value_at(400.0) == doctest::Approx(3.0 * 400.0).epsilon(1e-12));
  // fitted exponent from the last two nodes gives the same power law here
  h.right_exponent = std::numeric_limits<double>::quiet_NaN();
  CHECK(h.value_at(400.0) == doctest::Approx(3.0 * 400.0).epsilon(1e-9));

  CHECK_THROWS_AS(make_constant_grid({1.0, 100.0, 8}, 0.5), config_error);
  CHECK_THROWS_AS(make_constant_grid({0.0, 100.0, 64}, 0.5), config_error);
  CHECK_THROWS_AS(make_constant_grid({1.0, 100.0, 64}, -0.1), config_error);
  CHECK_THROWS_AS(make_constant_grid({10.0, 2.0, 64}, 0.5), config_error);
}

TEST_CASE("grid validation rejects malformed functions") {
  auto g = make_constant_grid({1.0, 10.0, 32}, 1.0);
  GridFunction bad = g;
  bad.values.pop_back();
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = g;
  bad.grid[5] = bad.grid[4];
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = g;
  bad.values[3] = -1e-9;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = g;
  bad.values[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad.grid = {2.0};
  bad.values = {1.0};
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("trusted region excludes the top decade") {
  auto g = make_constant_grid({1e-2, 100.0, 256}, 1.0);
  const std::size_t tr = g.trusted_size();
  REQUIRE(tr >= 2);
  CHECK(g.grid[tr - 1] <= 10.0);
  CHECK(g.grid[tr] > 10.0);
}

TEST_CASE("trapezoid helpers on exact cases") {
  auto g = make_constant_grid({1.0, 4.0, 256}, 2.0);
  CHECK(grid_integral(g) == doctest::Approx(6.0).epsilon(1e-13));
  // integrand x * 2 is linear, so the trapezoid rule is exact
  CHECK(grid_moment(g, 1.0) == doctest::Approx(15.0).epsilon(1e-13));
}

TEST_CASE("theta of zero is zero and the horizon is enforced") {
  auto m = make_compound_poisson_exponential();
  auto z = make_constant_grid({1.0, 50.0, 64}, 0.0);
  auto tz = theta_apply(z, *m);
  for (double v : tz.values) CHECK(v == 0.0);

  // seed 0.5 from x = 1e-2 needs reach over the e^{-12 ln 10} horizon,
  // about x_max = 55; a grid to 2 cannot hold it
  auto s = make_constant_grid({1e-2, 2.0, 64}, 0.5);
  CHECK_THROWS_WITH_AS(theta_apply(s, *m),
                       doctest::Contains("grid too short"), config_error);
}

TEST_CASE("theta on a constant seed matches direct quadrature") {
  auto m = make_compound_poisson_exponential();
  auto g = make_constant_grid({1.0, 100.0, 128}, 0.5);
  g.right_exponent = 0.0;
  auto t = theta_apply(g, *m);
  // Theta(a)(x) = int_0^inf (1 - e^{-a x (e^v - 1)}) e^{-v} dv
  quad::Options opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-16;
  for (std::size_t i : {std::size_t{0}, std::size_t{32}, std::size_t{64},
                        std::size_t{96}, std::size_t{127}}) {
    const double x = g.grid[i];
    auto f = [&](double v) {
      return (1.0 - std::exp(-0.5 * x * std::expm1(v))) * std::exp(-v);
    };
    auto r = quad::integrate(f, 0.0, 60.0, opt);
    REQUIRE(r.converged);
    CHECK(t.values[i] == doctest::Approx(r.value).epsilon(1e-8));
  }
}

TEST_CASE("theta is monotone in its argument") {
  auto m = make_compound_poisson_exponential();
  auto lo = make_constant_grid({1.0, 150.0, 96}, 0.3);
  auto hi = make_constant_grid({1.0, 150.0, 96}, 0.6);
  lo.right_exponent = 0.0;
  hi.right_exponent = 0.0;
  auto tlo = theta_apply(lo, *m);
  auto thi = theta_apply(hi, *m);
  for (std::size_t i = 0; i < lo.size(); ++i)
    CHECK(tlo.values[i] <= thi.values[i]);
}

TEST_CASE("theta_phi is pointwise phi(x g) with psi/x as fixed point") {
  auto m = make_compound_poisson_exponential();
  auto g = make_constant_grid({1.0, 50.0, 64}, 0.7);
  auto t = theta_phi_apply(g, *m);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ax = 0.7 * g.grid[i];
    CHECK(t.values[i] == doctest::Approx(ax / (1.0 + ax)).epsilon(1e-14));
  }

  // psi(x)/x satisfies phi(x g(x)) = g(x) exactly
  auto fix = make_constant_grid({2.0, 50.0, 64}, 1.0);
  for (std::size_t i = 0; i < fix.size(); ++i)
    fix.values[i] = (fix.grid[i] - 1.0) / fix.grid[i];
  auto tf = theta_phi_apply(fix, *m);
  for (std::size_t i = 0; i < fix.size(); ++i)
    CHECK(tf.values[i] == doctest::Approx(fix.values[i]).epsilon(1e-13));
}

TEST_CASE("one theta step preserves the exact fixed point") {
  auto m = make_compound_poisson_exponential();
  auto g = make_constant_grid({1e-2, 60.0, 512}, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    g.values[i] = g.grid[i] / (1.0 + g.grid[i]);
  g.right_exponent = 0.0;
  auto t = theta_apply(g, *m);
  double sup = 0.0;
  for (std::size_t i = 0; i < g.trusted_size(); ++i)
    sup = std::max(sup, std::fabs(t.values[i] - g.values[i]));
  CHECK(sup <= 1e-5);
}

TEST_CASE("iteration converges to the exact logarithmic derivative") {
  const auto& fp = exp_fp256();
  REQUIRE(fp.converged);
  CHECK(fp.iterations <= 25);
  CHECK(fp.residual <= 1e-6);
  CHECK(fp.kappa_hat == doctest::Approx(0.25).epsilon(1e-6));

  double sup = 0.0;
  for (std::size_t i = 0; i < fp.trusted_size(); ++i) {
    const double x = fp.grid[i];
    sup = std::max(sup, std::fabs(fp.values[i] - x / (1.0 + x)));
  }
  CHECK(sup <= 5e-5);
}

TEST_CASE("sandwich between psi(x)/x and the power envelope") {
  const auto& fp = exp_fp256();
  const double p = fp.kappa_hat / (1.0 - fp.kappa_hat);
  for (std::size_t i = 0; i < fp.trusted_size(); ++i) {
    const double x = fp.grid[i];
    if (x >= 1.5) CHECK(fp.values[i] - (x - 1.0) / x >= 5e-3);
    CHECK(std::pow(x, p) - fp.values[i] >= 0.0);
  }
}

TEST_CASE("iterates grow monotonically and dominate the phi variant") {
  auto m = make_compound_poisson_exponential();
  auto g = make_constant_grid({1e-2, 100.0, 256}, 0.5);
  g.right_exponent = 0.0;
  auto gphi = g;
  double worst_mono = 1e9, worst_dom = 1e9;
  for (int it = 1; it <= 4; ++it) {
    auto gn = theta_apply(g, *m);
    auto gp = theta_phi_apply(gphi, *m);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.grid[i];
      if (x < 2.5 || x > 10.0) continue;
      if (it >= 2) worst_mono = std::min(worst_mono, gn.values[i] - g.values[i]);
      worst_dom = std::min(worst_dom, gn.values[i] - gp.values[i]);
    }
    g.values = gn.values;
    gphi.values = gp.values;
  }
  CHECK(worst_mono >= 1e-4);
  CHECK(worst_dom >= 1e-3);
}

TEST_CASE("theta_phi iteration reaches psi(x)/x") {
  auto m = make_compound_poisson_exponential();
  auto g = make_constant_grid({1e-2, 100.0, 256}, 0.5);
  g.right_exponent = 0.0;
  for (int it = 0; it < 60; ++it) g = theta_phi_apply(g, *m);
  double sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.grid[i];
    if (x < 2.0 || x > 10.0) continue;
    sup = std::max(sup, std::fabs(g.values[i] - (x - 1.0) / x));
  }
  CHECK(sup <= 1e-12);
}

TEST_CASE("density integrates to one and reproduces the mean") {
  auto k = density_from_fprime(exp_fp256());
  CHECK(grid_integral(k) == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : k.values) CHECK(v >= 0.0);
  CHECK(k.normalization == doctest::Approx(1.0).epsilon(0.01));
  CHECK(grid_moment(k, 1.0) == doctest::Approx(2.0).epsilon(0.005));

  GridFunction fp = exp_fp256();
  fp.converged = false;
  CHECK_THROWS_AS(density_from_fprime(fp), config_error);
}

TEST_CASE("density satisfies the tail integral equation") {
  auto m = make_compound_poisson_exponential();
  auto k512 = density_from_fprime(exp_fp512());
  const double r512 = verify_integral_equation(k512, *m);
  CHECK(r512 <= 5e-3);

  auto fp1024 =
      iterate_to_fprime(*m, {1e-2, 60.0, 1024}, 0.5, 1e-6, 200);
  auto k1024 = density_from_fprime(fp1024);
  const double r1024 = verify_integral_equation(k1024, *m);
  CHECK(r1024 < r512);

  auto z = make_constant_grid({1.0, 50.0, 64}, 0.0);
  CHECK(verify_integral_equation(z, *m) == 0.0);
}

TEST_CASE("expansion order bound on the trusted band") {
  // weighted gap |f' - expansion| psi^2/psi' stays under a fixed constant
  auto ms = make_stable(0.5);
  auto fs = iterate_to_fprime(*ms, {0.5, 2000.0, 384}, 1.0, 1e-8, 300);
  REQUIRE(fs.converged);
  CHECK(fs.iterations <= 40);
  CHECK(fs.kappa_hat == doctest::Approx(0.625).epsilon(1e-9));
  double sup_ord = 0.0, sup_rel = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double x = fs.grid[i];
    if (x < 20.0 || x > 200.0) continue;
    const double exact = x + 0.5 / x;  // f' for the 1/2-stable subordinator
    const double d = std::fabs(fs.values[i] - exact);
    sup_ord = std::max(sup_ord, d * x * x * x / 2.0);
    sup_rel = std::max(sup_rel, d / exact);
    CHECK(fs.values[i] > x);  // psi(x)/x lower bound
  }
  CHECK(sup_ord <= 20.0);
  CHECK(sup_rel <= 2e-5);

  auto m = make_compound_poisson_exponential();
  auto fp = iterate_to_fprime(*m, {1e-2, 60.0, 512}, 0.5, 1e-8, 300);
  PsiEvaluator ev(m);
  double sup = 0.0;
  for (std::size_t i = 0; i < fp.trusted_size(); ++i) {
    const double x = fp.grid[i];
    if (x <= 2.05) continue;
    sup = std::max(sup, std::fabs(fp.values[i] - fprime_expansion(ev, x)) *
                            ev.psi(x) * ev.psi(x) / ev.psi_prime(x));
  }
  CHECK(sup <= 0.5);
}

TEST_CASE("iteration input validation") {
  auto m = make_compound_poisson_exponential();
  GridSpec s{1e-2, 100.0, 256};
  CHECK_THROWS_AS(iterate_to_fprime(*m, s, 0.0), config_error);
  CHECK_THROWS_AS(iterate_to_fprime(*m, s, 1.0), config_error);
  CHECK_THROWS_AS(iterate_to_fprime(*m, s, 1.5), config_error);
  CHECK_THROWS_AS(iterate_to_fprime(*m, s, 0.5, 0.0), config_error);
  CHECK_THROWS_AS(iterate_to_fprime(*m, s, 0.5, 1e-6, 0), config_error);
}

TEST_CASE("grid csv round trip preserves data and metadata") {
  const auto& fp = exp_fp256();
  std::ostringstream out;
  write_grid_csv(fp, out);
  std::istringstream in(out.str());
  auto back = read_grid_csv(in);
  REQUIRE(back.size() == fp.size());
  for (std::size_t i = 0; i < fp.size(); ++i) {
    CHECK(back.grid[i] == fp.grid[i]);
    CHECK(back.values[i] == fp.values[i]);
  }
  CHECK(back.model_hash == fp.model_hash);
  CHECK(back.iterations == fp.iterations);
  CHECK(back.residual == fp.residual);
  CHECK(back.converged == fp.converged);
  CHECK(back.kappa_hat == fp.kappa_hat);
  CHECK(back.right_exponent == fp.right_exponent);
  CHECK(back.normalization == fp.normalization);

  std::istringstream noheader("1.0,2.0\n");
  CHECK_THROWS_WITH_AS(read_grid_csv(noheader),
                       doctest::Contains("header"), config_error);
  std::istringstream badrow("x,value\n1.0;2.0\n");
  CHECK_THROWS_AS(read_grid_csv(badrow), config_error);
}
