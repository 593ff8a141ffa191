#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subexp/levy_model.hpp"
#include "subexp/psi.hpp"

// Large-t equivalents of the upper tail P(I > t) and density k(t) of the
// exponential functional I = int_0^inf e^{-xi_r} dr, evaluated on log scale
// throughout: the tails underflow double precision already near t ~ 40.
// The multiplicative constant of an equivalent is unknowable in general and
// is everywhere set to 1; callers add ln(c) after estimating it.

namespace subexp {

enum class AsymptoticKind { tail, density, ssmp_moment };

// One closed-form equivalent  t^{prefactor_exponent} exp(sum_i c_i t^{p_i}).
// exp_terms holds (c_i, p_i) with strictly decreasing powers and a negative
// leading coefficient.  log_value_fn evaluates the whole log expression; for
// models without a pure power form (the Gamma subordinator, whose exponent
// involves t ln t) exp_terms stays empty and log_value_fn carries everything.
struct AsymptoticForm {
    AsymptoticKind kind = AsymptoticKind::tail;
    std::function<double(double)> log_value_fn;
    double prefactor_exponent = 0.0;
    std::vector<std::pair<double, double>> exp_terms;
    bool constant_known = false;
    std::optional<double> constant;

    double log_value(double t) const;
    std::string to_json() const;
};

// ln[ t (psi'(t))^{1/2} / psi(t) ] - int_{x_psi+1}^t psi(r)/r dr,  t > x_psi+1
double tail_log_asym(const PsiEvaluator& ev, double t);

// ln[ (psi'(t))^{1/2} ] - int_{x_psi+1}^t psi(r)/r dr
double density_log_asym(const PsiEvaluator& ev, double t);

// four-term expansion of f'(x) = k(x)/P(I>x):
//   psi(x)/x + psi'(x)/psi(x) - 1/x - psi''(x)/(2 psi'(x))
double fprime_expansion(const PsiEvaluator& ev, double x);

// Closed power-form equivalent for the given model, as far as one exists:
// stable and Gamma subordinators, finite-activity models with a small-u tail
// expansion, infinite power tails, and the (a,b,c) family outside the band
// b in [-1/2, 1/2] where additional power contributions preclude a general
// formula (unsupported_regime_error there).
AsymptoticForm closed_form(const LevyModel& model,
                           AsymptoticKind kind = AsymptoticKind::tail);

// Explicit tail constant for a finite Levy measure with pi(0,u) = b u + o(u^{1+delta}):
//   c_I = |pi|^b e^{b gamma_E} / prod_{k>=1} (1 - int e^{-uk} pi(du)/|pi|) e^{b/k},
// the product truncated at `terms` factors with an extrapolated remainder.
double mz_constant(const LevyModel& model, double b, double delta,
                   int terms = 10000);

// Monte Carlo estimate of c_I = E[exp(|pi| e^{-X} I)] for finite Levy
// measures with int u^{-1} pi(du) < inf; X is one normalized jump drawn
// independently of I.
struct LightTailEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long n = 0;
    // false when a handful of samples dominates the running mean, the
    // signature of a diverging-variance estimator
    bool reliable = false;
};
LightTailEstimate mz_constant_lighttail(const LevyModel& model, long n_samples,
                                        std::uint64_t seed);

// ln of the moment equivalent for a non-increasing 1/alpha-self-similar
// Markov process started from 1:
//   E[(X(t))^a] ~ C (t/psi(alpha t))^{1+a/alpha} (psi'(alpha t))^{1/2}
//                   exp(-(1/alpha) int_{x_psi+1}^{alpha t} psi(r)/r dr)
double ssmp_moment_log_asym(const PsiEvaluator& ev, double alpha, double a,
                            double t);

}  // namespace subexp
