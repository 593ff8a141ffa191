#pragma once

#include <mutex>
#include <optional>
#include <vector>

#include "subexp/levy_model.hpp"

namespace subexp {

// Inverts x -> x / phi(x) and evaluates the exponent integral
// F(t) = int_{x_psi + 1}^t psi(r) / r dr.
//
// The integral is cached at geometric checkpoints t_k = (x_psi + 1) 2^{k/4};
// a query pays fresh quadrature only for the residual piece past the last
// checkpoint below t.  Cache growth is mutex-guarded, point evaluations are
// lock-free, so warmed-up evaluators can be shared across threads.
class PsiEvaluator {
  public:
    explicit PsiEvaluator(ModelPtr model, double root_tolerance = 1e-12);

    PsiEvaluator(const PsiEvaluator&) = delete;
    PsiEvaluator& operator=(const PsiEvaluator&) = delete;

    const LevyModel& model() const { return *model_; }
    double x_psi() const { return x_psi_; }
    double root_tolerance() const { return root_tolerance_; }

    // psi(x), defined for x > x_psi; the returned y satisfies
    // |y / phi(y) - x| <= root_tolerance * x.
    double psi(double x) const;

    // psi'(x) = phi(psi(x)) / (1 - x phi'(psi(x)))
    double psi_prime(double x) const;

    // psi''(x) = (2 phi'(psi) psi' + x phi''(psi) psi'^2) / (1 - x phi'(psi))
    double psi_second(double x) const;

    // F(t) above, for t >= x_psi + 1
    double exponent_integral(double t) const;

  private:
    double solve(double x) const;
    double checkpoint(std::size_t k) const;
    double integrate_segment(double a, double b) const;

    ModelPtr model_;
    double x_psi_ = 0.0;
    double root_tolerance_ = 1e-12;
    std::optional<double> stable_alpha_;
    mutable std::mutex cache_mutex_;
    mutable std::vector<double> cumulative_{0.0};
};

// Closed-form psi for the Gamma subordinator,
// psi(t) = -t W_{-1}(-e^{-1/t}/t) - 1, valid for t > 1.
double gamma_psi_closed(double t);

}  // namespace subexp
