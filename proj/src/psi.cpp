#include "subexp/psi.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "subexp/errors.hpp"
#include "subexp/quadrature.hpp"
#include "subexp/special_functions.hpp"

namespace subexp {

namespace {

quad::Options integral_options() {
    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-14;
    opt.max_intervals = 4000;
    return opt;
}

}  // namespace

PsiEvaluator::PsiEvaluator(ModelPtr model, double root_tolerance)
    : model_(std::move(model)), root_tolerance_(root_tolerance) {
    if (!model_) throw config_error("PsiEvaluator: null model");
    if (!(root_tolerance_ > 0.0 && root_tolerance_ < 1e-2))
        throw config_error("PsiEvaluator: root tolerance out of range");
    x_psi_ = model_->x_psi();
    if (model_->variant() == "stable") {
        auto params = nlohmann::json::parse(model_->params_json());
        stable_alpha_ = params.at("alpha").get<double>();
    }
}

double PsiEvaluator::psi(double x) const {
    if (!(x > x_psi_))
        throw domain_error("psi: x = " + std::to_string(x) +
                           " must exceed x_psi = " + std::to_string(x_psi_));
    if (stable_alpha_) return std::pow(x, 1.0 / (1.0 - *stable_alpha_));
    return solve(x);
}

double PsiEvaluator::solve(double x) const {
    auto residual = [&](double y) { return y / model_->phi(y) - x; };
    double guess = x * model_->phi(x);
    if (!(guess > 0.0) || !std::isfinite(guess)) guess = x;

    // bracket the root of the increasing map y -> y/phi(y) - x
    double lo = guess;
    double hi = guess;
    double f_at = residual(guess);
    if (f_at == 0.0) return guess;
    if (f_at < 0.0) {
        int steps = 0;
        do {
            lo = hi;
            hi *= 2.0;
            if (++steps > 1000 || !std::isfinite(hi))
                throw numeric_error("psi: bracket expansion failed");
        } while (residual(hi) < 0.0);
    } else {
        int steps = 0;
        do {
            hi = lo;
            lo *= 0.5;
            if (++steps > 1000 || lo <= 0.0)
                throw numeric_error("psi: bracket contraction failed");
        } while (residual(lo) > 0.0);
    }

    // Newton on y/phi(y) - x with bisection safeguard
    double y = 0.5 * (lo + hi);
    double achieved = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double ph = model_->phi(y);
        const double f = y / ph - x;
        achieved = std::abs(f) / x;
        if (achieved <= root_tolerance_) return y;
        if (f > 0.0)
            hi = y;
        else
            lo = y;
        const double dp = model_->phi_derivative(y, 1);
        const double slope = (ph - y * dp) / (ph * ph);
        double next = (slope > 0.0) ? y - f / slope : lo;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        y = next;
    }
    throw numeric_error("psi: root refinement stalled", achieved);
}

double PsiEvaluator::psi_prime(double x) const {
    const double y = psi(x);
    const double dp = model_->phi_derivative(y, 1);
    const double denom = 1.0 - x * dp;
    if (denom <= 1e-12)
        throw numeric_error("psi_prime: x phi'(psi(x)) = " +
                                std::to_string(x * dp) + " is too close to 1",
                            x * dp);
    return model_->phi(y) / denom;
}

double PsiEvaluator::psi_second(double x) const {
    const double y = psi(x);
    const double dp = model_->phi_derivative(y, 1);
    const double denom = 1.0 - x * dp;
    if (denom <= 1e-12)
        throw numeric_error("psi_second: x phi'(psi(x)) = " +
                                std::to_string(x * dp) + " is too close to 1",
                            x * dp);
    const double d1 = model_->phi(y) / denom;
    const double ddp = model_->phi_derivative(y, 2);
    return (2.0 * dp * d1 + x * ddp * d1 * d1) / denom;
}

double PsiEvaluator::checkpoint(std::size_t k) const {
    return (x_psi_ + 1.0) * std::exp2(0.25 * static_cast<double>(k));
}

double PsiEvaluator::integrate_segment(double a, double b) const {
    return quad::integrate_checked([&](double r) { return psi(r) / r; }, a, b,
                                   integral_options(), "exponent_integral");
}

double PsiEvaluator::exponent_integral(double t) const {
    const double t0 = x_psi_ + 1.0;
    if (!(t >= t0))
        throw domain_error("exponent_integral: t = " + std::to_string(t) +
                           " must be at least x_psi + 1 = " +
                           std::to_string(t0));
    if (stable_alpha_) {
        const double p = 1.0 / (1.0 - *stable_alpha_);
        return (1.0 - *stable_alpha_) * (std::pow(t, p) - 1.0);
    }
    if (t == t0) return 0.0;

    auto k = static_cast<long>(std::floor(4.0 * std::log2(t / t0)));
    if (k < 0) k = 0;
    while (k > 0 && checkpoint(static_cast<std::size_t>(k)) > t) --k;
    const auto idx = static_cast<std::size_t>(k);

    double base;
    {
        std::lock_guard<std::mutex> guard(cache_mutex_);
        while (cumulative_.size() <= idx) {
            const std::size_t j = cumulative_.size();
            const double inc =
                integrate_segment(checkpoint(j - 1), checkpoint(j));
            cumulative_.push_back(cumulative_.back() + inc);
        }
        base = cumulative_[idx];
    }
    const double ck = checkpoint(idx);
    if (t > ck) base += integrate_segment(ck, t);
    return base;
}

double gamma_psi_closed(double t) {
    if (!(t > 1.0))
        throw domain_error("gamma_psi_closed: requires t > 1, got " +
                           std::to_string(t));
    const double arg = -std::exp(-1.0 / t) / t;
    return -t * lambert_w_minus1(arg) - 1.0;
}

}  // namespace subexp
