#pragma once

#include <utility>

// Self-contained special functions backing the closed-form asymptotics:
// log-Gamma and friends, Lambert W on the lower branch, the exponential
// integral E1, and the Beta-tail identity used as a self-test.

namespace subexp {

inline constexpr double euler_gamma = 0.57721566490153286061;

// ln Gamma(x) for x > 0.
double log_gamma(double x);

// ln |Gamma(z)| for non-pole real z; sign receives the sign of Gamma(z).
double log_gamma_signed(double z, int& sign);

// 1/Gamma(z) as an entire function; exact zero at the poles z = 0, -1, -2, ...
double rgamma(double z);

// Gamma(z)/Gamma(w).  w may be a pole (result 0) or negative non-pole.
double gamma_over_gamma(double z, double w);

// Gamma(x+c)/Gamma(x) for x > 0; switches to the second-order asymptotic
// x^c (1 + c(c-1)/(2x) + ...) above x = 1e6.  Negative c permitted;
// x + c may continue below 0 as long as it is not a pole.
double gamma_ratio(double x, double c);

// Digamma and trigamma for non-pole real arguments.
double digamma(double x);
double trigamma(double x);

// psi_0(z) - psi_0(z+s) and psi_1(z) - psi_1(z+s) for z > 0, s >= 0,
// evaluated without the cancellation a naive subtraction suffers at large z.
double digamma_diff(double z, double s);
double trigamma_diff(double z, double s);

// Lower branch W_{-1} on (-1/e, 0): w <= -1 with w e^w = y.
double lambert_w_minus1(double y);

// Exponential integral E1(x) = int_x^inf v^{-1} e^{-v} dv, x > 0.
double exp_integral_e1(double x);

// Both sides of the identity
//   (1/Gamma(b)) int_0^1 (1-u^x) u^{a-1} (1-u)^{b-1} du
//     = Gamma(a)/Gamma(a+b) - Gamma(x+a)/Gamma(x+a+b)
// for a > 0, b in (-1,0) or b > 0, x >= 0.  The left side is evaluated by
// quadrature (with the endpoint singularity subtracted for b < 0), the
// right side by the Gamma-ratio continuation.
std::pair<double, double> beta_tail_identity(double a, double b, double x);

}  // namespace subexp
