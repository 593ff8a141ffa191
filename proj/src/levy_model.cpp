#include "subexp/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "subexp/errors.hpp"
#include "subexp/quadrature.hpp"
#include "subexp/special_functions.hpp"

namespace subexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_x_nonneg(double x) {
    if (!(x >= 0.0))
        throw domain_error("phi: x must be >= 0, got " + std::to_string(x));
}

void require_deriv_args(double x, int order) {
    if (!(x > 0.0))
        throw domain_error("phi_derivative: x must be > 0");
    if (order != 1 && order != 2)
        throw domain_error("phi_derivative: order must be 1 or 2");
}

quad::Options phi_quad_options() {
    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-14;
    opt.max_intervals = 8000;
    return opt;
}

// phi and its derivatives from the tail function alone:
//   phi(x)   = x int e^{-xu} pibar(u) du
//   phi'(x)  = int (1-xu) e^{-xu} pibar(u) du
//   phi''(x) = int u (xu-2) e^{-xu} pibar(u) du
// Integrate f over (0, support_end) where f carries an e^{-xu} factor.  The
// active region shrinks like 1/x, so split there explicitly; otherwise a
// coarse top-level panel can see zeros at every node and "converge" to 0.
template <class F>
double integrate_scaled(const F& f, double x, double support_end,
                        const char* what) {
    quad::Options opt = phi_quad_options();
    const double scale = (x > 0.0) ? 50.0 / x : kInf;
    double total = 0.0;
    double lo = 0.0;
    if (scale < std::min(1.0, support_end)) {
        total += quad::integrate_checked(f, 0.0, scale, opt, what);
        lo = scale;
    }
    if (std::isfinite(support_end)) {
        total += quad::integrate_checked(f, lo, support_end, opt, what);
        return total;
    }
    total += quad::integrate_checked(f, lo, 1.0, opt, what);
    auto r = quad::integrate_tail(f, 1.0, opt);
    if (!r.converged)
        throw numeric_error(std::string(what) + ": tail quadrature failed",
                            r.error);
    return total + r.value;
}

template <class Tail>
double tail_phi(const Tail& tail, double x, double support_end) {
    if (x == 0.0) return 0.0;
    auto f = [&](double u) { return std::exp(-x * u) * tail(u); };
    return x * integrate_scaled(f, x, support_end, "phi from tail");
}

template <class Tail>
double tail_phi_derivative(const Tail& tail, double x, int order,
                           double support_end) {
    auto f = [&](double u) {
        const double e = std::exp(-x * u) * tail(u);
        return (order == 1) ? (1.0 - x * u) * e : u * (x * u - 2.0) * e;
    };
    return integrate_scaled(f, x, support_end, "phi_derivative from tail");
}

class StableModel final : public LevyModel {
  public:
    explicit StableModel(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw config_error("stable: alpha must lie in (0,1)");
        inv_gamma_ = rgamma(1.0 - alpha);  // 1/Gamma(1-alpha)
    }
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override {
        require_x_nonneg(x);
        return std::pow(x, alpha_);
    }
    double phi_derivative(double x, int order) const override {
        require_deriv_args(x, order);
        if (order == 1) return alpha_ * std::pow(x, alpha_ - 1.0);
        return alpha_ * (alpha_ - 1.0) * std::pow(x, alpha_ - 2.0);
    }
    double pi_tail(double u) const override {
        return inv_gamma_ * std::pow(u, -alpha_);
    }
    double total_mass() const override { return kInf; }
    double mean_jump() const override { return kInf; }
    bool has_density() const override { return true; }
    double pi_density(double v) const override {
        return alpha_ * inv_gamma_ * std::pow(v, -1.0 - alpha_);
    }
    std::string params_json() const override {
        return "{\"alpha\":" + fmt(alpha_) + "}";
    }

  private:
    double alpha_;
    double inv_gamma_;
    std::string variant_ = "stable";
};

class GammaSubModel final : public LevyModel {
  public:
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override {
        require_x_nonneg(x);
        return std::log1p(x);
    }
    double phi_derivative(double x, int order) const override {
        require_deriv_args(x, order);
        const double d = 1.0 + x;
        return (order == 1) ? 1.0 / d : -1.0 / (d * d);
    }
    double pi_tail(double u) const override { return exp_integral_e1(u); }
    double total_mass() const override { return kInf; }
    double mean_jump() const override { return 1.0; }
    bool has_density() const override { return true; }
    double pi_density(double v) const override { return std::exp(-v) / v; }
    std::string params_json() const override { return "{}"; }

  private:
    std::string variant_ = "gamma";
};

class AbcModel final : public LevyModel {
  public:
    AbcModel(double a, double b, double c, std::string variant = "abc")
        : a_(a), b_(b), c_(c), variant_(std::move(variant)) {
        if (!(a > 0.0)) throw config_error("abc: a must be > 0");
        if (!(c > 0.0)) throw config_error("abc: c must be > 0");
        if (!(b > -1.0) || b == 0.0)
            throw config_error("abc: b must be > -1 and nonzero");
        int sb = 1;
        const double lgb = log_gamma_signed(b, sb);
        gamma_b_ = sb * std::exp(lgb);
        r_at_zero_ = ratio_r(a_ * c_);
    }
    const std::string& variant() const override { return variant_; }

    // phi(x) = Gamma(b) [ Gamma(ac)/Gamma(ac+b) - Gamma(xc+ac)/Gamma(xc+ac+b) ]
    double phi(double x) const override {
        require_x_nonneg(x);
        if (x == 0.0) return 0.0;
        return gamma_b_ * (r_at_zero_ - ratio_r(x * c_ + a_ * c_));
    }

    double phi_derivative(double x, int order) const override {
        require_deriv_args(x, order);
        const double z = x * c_ + a_ * c_;
        if (order == 1) return -gamma_b_ * c_ * ratio_digamma(z);
        return -gamma_b_ * c_ * c_ * ratio_curvature(z);
    }

    double pi_tail(double u) const override {
        if (!(u > 0.0)) throw domain_error("pi_tail: u must be > 0");
        auto f = [this](double v) { return pi_density(v); };
        quad::Options opt = phi_quad_options();
        auto r = quad::integrate_tail(f, u, opt);
        if (!r.converged)
            throw numeric_error("abc pi_tail: quadrature failed", r.error);
        return r.value;
    }

    double total_mass() const override {
        if (b_ < 0.0) return kInf;
        // Gamma(b) Gamma(ac) / Gamma(ac+b), all arguments positive
        return std::exp(log_gamma(b_) + log_gamma(a_ * c_) -
                        log_gamma(a_ * c_ + b_));
    }

    double mean_jump() const override {
        return -gamma_b_ * c_ * ratio_digamma(a_ * c_);
    }

    bool has_density() const override { return true; }
    double pi_density(double v) const override {
        // c^{-1} e^{-av} (1-e^{-v/c})^{b-1}
        const double one_minus = -std::expm1(-v / c_);
        return std::exp(-a_ * v + (b_ - 1.0) * std::log(one_minus)) / c_;
    }

    std::string params_json() const override {
        return "{\"a\":" + fmt(a_) + ",\"b\":" + fmt(b_) + ",\"c\":" + fmt(c_) +
               "}";
    }

    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }

  private:
    // R(z) = Gamma(z)/Gamma(z+b).  The shift b must reach the ratio kernel
    // exactly: at large z the rounded sum z+b drops low bits of b, and the
    // digamma sensitivity of ln Gamma turns that into ~ln(z)*ulp(z) relative
    // error (at z ~ 1e17, ulp(z) already exceeds |b|).  The signed fallback
    // also returns 0 at the Gamma pole z+b = 0 where R vanishes.
    double ratio_r(double z) const {
        if (z >= 0.5 && z + b_ >= 0.5) return 1.0 / gamma_ratio(z, b_);
        return gamma_over_gamma(z, z + b_);
    }
    // R(z) (psi0(z) - psi0(z+b)), written to stay finite when w = z+b crosses
    // the Gamma pole at 0 (possible since b > -1 allows w in (-1, 0]):
    //   = Gamma(z)/Gamma(w+1) * [ w (psi0(z) - psi0(w+1)) + 1 ]
    // w only ever multiplies, so its rounding is harmless; the Gamma and
    // digamma evaluations take the exact shift b+1 instead
    double ratio_digamma(double z) const {
        const double w = z + b_;
        const double d = psi0_gap(z);
        return ratio_r1(z) * (w * d + 1.0);
    }
    // R(z) [ (psi0(z)-psi0(w))^2 + psi1(z) - psi1(w) ], same pole treatment:
    //   = Gamma(z)/Gamma(w+1) * [ w (D^2 + psi1(z) - psi1(w+1)) + 2D ]
    double ratio_curvature(double z) const {
        const double w = z + b_;
        const double d = psi0_gap(z);
        const double t = (z >= 0.5) ? trigamma_diff(z, b_ + 1.0)
                                    : trigamma(z) - trigamma(w + 1.0);
        return ratio_r1(z) * (w * (d * d + t) + 2.0 * d);
    }
    // Gamma(z)/Gamma(z+b+1); b+1 > 0, so no pole for z >= 0.5
    double ratio_r1(double z) const {
        if (z >= 0.5) return 1.0 / gamma_ratio(z, b_ + 1.0);
        return gamma_over_gamma(z, z + b_ + 1.0);
    }
    // psi0(z) - psi0(z+b+1), stable at large arguments where both digammas
    // agree to many digits
    double psi0_gap(double z) const {
        if (z >= 0.5) return digamma_diff(z, b_ + 1.0);
        return digamma(z) - digamma(z + b_ + 1.0);
    }

    double a_, b_, c_;
    double gamma_b_;
    double r_at_zero_;
    std::string variant_;
};

class CompoundPoissonExpModel final : public LevyModel {
  public:
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override {
        require_x_nonneg(x);
        return x / (1.0 + x);
    }
    double phi_derivative(double x, int order) const override {
        require_deriv_args(x, order);
        const double d = 1.0 + x;
        return (order == 1) ? 1.0 / (d * d) : -2.0 / (d * d * d);
    }
    double pi_tail(double u) const override { return std::exp(-u); }
    double total_mass() const override { return 1.0; }
    double mean_jump() const override { return 1.0; }
    bool has_density() const override { return true; }
    double pi_density(double v) const override { return std::exp(-v); }
    std::optional<std::vector<ExpansionTerm>> lower_expansion() const override {
        // pibar(0+) - pibar(u) = 1 - e^{-u} = u + o(u)
        return std::vector<ExpansionTerm>{{1.0, 1.0}};
    }
    std::string params_json() const override {
        return "{\"kind\":\"exponential\"}";
    }

  private:
    std::string variant_ = "compound_poisson";
};

class CompoundPoissonCustomModel final : public LevyModel {
  public:
    CompoundPoissonCustomModel(std::function<double(double)> tail_fn,
                               double total_mass,
                               std::optional<std::vector<ExpansionTerm>> exp_)
        : tail_(std::move(tail_fn)), mass_(total_mass),
          expansion_(std::move(exp_)) {
        if (!(mass_ > 0.0) || !std::isfinite(mass_))
            throw config_error("compound_poisson: total_mass must be finite > 0");
        if (!tail_) throw config_error("compound_poisson: tail_fn required");
        quad::Options opt = phi_quad_options();
        auto r = quad::integrate_positive_axis(tail_, opt);
        if (!r.converged)
            throw numeric_error("compound_poisson: mean-jump quadrature failed",
                                r.error);
        mean_ = r.value;
    }
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override {
        require_x_nonneg(x);
        return tail_phi(tail_, x, kInf);
    }
    double phi_derivative(double x, int order) const override {
        require_deriv_args(x, order);
        return tail_phi_derivative(tail_, x, order, kInf);
    }
    double pi_tail(double u) const override { return tail_(u); }
    double total_mass() const override { return mass_; }
    double mean_jump() const override { return mean_; }
    std::optional<std::vector<ExpansionTerm>> lower_expansion() const override {
        return expansion_;
    }
    std::string params_json() const override {
        return "{\"kind\":\"custom\",\"total_mass\":" + fmt(mass_) + "}";
    }

  private:
    std::function<double(double)> tail_;
    double mass_;
    double mean_;
    std::optional<std::vector<ExpansionTerm>> expansion_;
    std::string variant_ = "compound_poisson";
};

class InfinitePowerTailModel final : public LevyModel {
  public:
    InfinitePowerTailModel(std::vector<ExpansionTerm> coeffs,
                           double remainder_order)
        : coeffs_(std::move(coeffs)), remainder_order_(remainder_order) {
        if (coeffs_.size() < 2)
            throw config_error(
                "infinite_power_tail: need the leading term and the "
                "gamma0 - 1 closing term");
        const double g0 = coeffs_.front().exponent;
        if (!(g0 > 0.0 && g0 < 1.0))
            throw config_error("infinite_power_tail: gamma0 must lie in (0,1)");
        if (std::abs(coeffs_.front().coeff * std::tgamma(1.0 - g0) - 1.0) >
            1e-10)
            throw config_error(
                "infinite_power_tail: leading coefficient must be "
                "1/Gamma(1-gamma0)");
        for (std::size_t i = 1; i < coeffs_.size(); ++i) {
            if (!(coeffs_[i].exponent < coeffs_[i - 1].exponent))
                throw config_error(
                    "infinite_power_tail: exponents must decrease strictly");
        }
        if (std::abs(coeffs_.back().exponent - (g0 - 1.0)) > 1e-12)
            throw config_error(
                "infinite_power_tail: last exponent must equal gamma0 - 1");
        s1_ = 0.0;
        s1p_ = 0.0;
        for (const auto& t : coeffs_) {
            s1_ += t.coeff;
            s1p_ -= t.coeff * t.exponent;
        }
        if (!(s1_ > 0.0))
            throw config_error("infinite_power_tail: tail must be positive");
        // the tail must stay positive and non-increasing on its support
        for (int i = 0; i <= 4000; ++i) {
            const double u = std::pow(10.0, -12.0 + 12.3 * i / 4000.0);
            const double v = pi_tail(u);
            const double vn = pi_tail(u * 1.0005);
            if (!(v >= 0.0) || vn > v * (1.0 + 1e-12))
                throw config_error(
                    "infinite_power_tail: tail is not non-increasing at u = " +
                    std::to_string(u));
        }
    }
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override {
        require_x_nonneg(x);
        return tail_phi([this](double u) { return pi_tail(u); }, x, 2.0);
    }
    double phi_derivative(double x, int order) const override {
        require_deriv_args(x, order);
        return tail_phi_derivative([this](double u) { return pi_tail(u); }, x,
                                   order, 2.0);
    }
    double pi_tail(double u) const override {
        if (!(u > 0.0)) throw domain_error("pi_tail: u must be > 0");
        if (u >= 2.0) return 0.0;
        if (u <= 1.0) {
            double s = 0.0;
            for (const auto& t : coeffs_)
                s += t.coeff * std::pow(u, -t.exponent);
            return s;
        }
        // C^1 monotone Hermite bridge from (1, s1) with slope s1' to (2, 0)
        const double w = u - 1.0;
        const double h00 = (2.0 * w - 3.0) * w * w + 1.0;
        const double h10 = ((w - 2.0) * w + 1.0) * w;
        return s1_ * h00 + s1p_ * h10;
    }
    double total_mass() const override { return kInf; }
    double mean_jump() const override {
        double m = s1_ / 2.0 + s1p_ / 12.0;
        for (const auto& t : coeffs_) m += t.coeff / (1.0 - t.exponent);
        return m;
    }
    std::optional<std::vector<ExpansionTerm>> lower_expansion() const override {
        return coeffs_;
    }
    std::string params_json() const override {
        return "{\"remainder_order\":" + fmt(remainder_order_) + "}";
    }
    const std::vector<ExpansionTerm>& coeffs() const { return coeffs_; }
    double remainder_order() const { return remainder_order_; }

  private:
    std::vector<ExpansionTerm> coeffs_;
    double remainder_order_;
    double s1_, s1p_;
    std::string variant_ = "infinite_power_tail";
};

class BetaCoalescentModel final : public LevyModel {
  public:
    BetaCoalescentModel(double alpha, double beta)
        : alpha_(checked_alpha(alpha)), beta_(checked_beta(beta)),
          base_(beta / (2.0 - alpha), alpha - 2.0, 2.0 - alpha) {
        scale_ = (2.0 - alpha) / std::exp(log_gamma(alpha));
    }
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override { return scale_ * base_.phi(x); }
    double phi_derivative(double x, int order) const override {
        return scale_ * base_.phi_derivative(x, order);
    }
    double pi_tail(double u) const override {
        return scale_ * base_.pi_tail(u);
    }
    double total_mass() const override { return kInf; }
    double mean_jump() const override { return scale_ * base_.mean_jump(); }
    bool has_density() const override { return true; }
    double pi_density(double v) const override {
        return scale_ * base_.pi_density(v);
    }
    std::string params_json() const override {
        return "{\"alpha\":" + fmt(alpha_) + ",\"beta\":" + fmt(beta_) + "}";
    }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    const AbcModel& base() const { return base_; }
    double scale() const { return scale_; }

  private:
    static double checked_alpha(double a) {
        if (!(a > 1.0 && a < 2.0))
            throw config_error("beta_coalescent: alpha must lie in (1,2)");
        return a;
    }
    static double checked_beta(double b) {
        if (!(b > 0.0))
            throw config_error("beta_coalescent: beta must be > 0");
        return b;
    }

    double alpha_, beta_;
    AbcModel base_;
    double scale_;
    std::string variant_ = "beta_coalescent";
};

class BarrierWalkModel final : public LevyModel {
  public:
    explicit BarrierWalkModel(double c)
        : c_(checked_c(c)), base_(1.0 / c, -c, c) {}
    const std::string& variant() const override { return variant_; }
    double phi(double x) const override { return base_.phi(x); }
    double phi_derivative(double x, int order) const override {
        return base_.phi_derivative(x, order);
    }
    double pi_tail(double u) const override { return base_.pi_tail(u); }
    double total_mass() const override { return base_.total_mass(); }
    double mean_jump() const override { return base_.mean_jump(); }
    bool has_density() const override { return true; }
    double pi_density(double v) const override { return base_.pi_density(v); }
    std::string params_json() const override {
        return "{\"c\":" + fmt(c_) + "}";
    }
    double c() const { return c_; }
    const AbcModel& base() const { return base_; }

  private:
    static double checked_c(double c) {
        if (!(c > 0.0 && c < 1.0))
            throw config_error("barrier_walk: c must lie in (0,1)");
        return c;
    }

    double c_;
    AbcModel base_;
    std::string variant_ = "barrier_walk";
};

}  // namespace

double LevyModel::pi_density(double) const {
    throw unsupported_regime_error(variant() +
                                   ": no closed-form Levy density");
}

double LevyModel::x_psi() const {
    const double m = mean_jump();
    if (std::isinf(m)) return 0.0;
    return 1.0 / m;
}

ModelPtr make_stable(double alpha) {
    return std::make_shared<StableModel>(alpha);
}
ModelPtr make_gamma_sub() { return std::make_shared<GammaSubModel>(); }
ModelPtr make_abc(double a, double b, double c) {
    return std::make_shared<AbcModel>(a, b, c);
}
ModelPtr make_compound_poisson_exponential() {
    return std::make_shared<CompoundPoissonExpModel>();
}
ModelPtr make_compound_poisson(
    std::function<double(double)> tail_fn, double total_mass,
    std::optional<std::vector<ExpansionTerm>> lower_expansion) {
    return std::make_shared<CompoundPoissonCustomModel>(
        std::move(tail_fn), total_mass, std::move(lower_expansion));
}
ModelPtr make_infinite_power_tail(std::vector<ExpansionTerm> coeffs,
                                  double remainder_order) {
    return std::make_shared<InfinitePowerTailModel>(std::move(coeffs),
                                                    remainder_order);
}
ModelPtr make_beta_coalescent(double alpha, double beta) {
    return std::make_shared<BetaCoalescentModel>(alpha, beta);
}
ModelPtr make_barrier_walk(double c) {
    return std::make_shared<BarrierWalkModel>(c);
}

HDiagnostic check_H(const LevyModel& model, const std::vector<double>& x_grid) {
    if (x_grid.empty()) throw domain_error("check_H: empty grid");
    double prev = 0.0;
    HDiagnostic diag{0.0, 0.0};
    for (double x : x_grid) {
        if (!(x > prev))
            throw domain_error("check_H: grid must be strictly increasing "
                               "and positive");
        prev = x;
        const double r = x * model.phi_derivative(x, 1) / model.phi(x);
        diag.max_ratio = std::max(diag.max_ratio, r);
        diag.at_largest = r;
    }
    return diag;
}

std::vector<MomentEntry> exact_moments(const LevyModel& model, int n_max) {
    if (n_max < 1) throw domain_error("exact_moments: n_max must be >= 1");
    std::vector<MomentEntry> out;
    out.reserve(n_max);
    double sum_log_phi = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double p = model.phi(static_cast<double>(n));
        if (!(p > 0.0))
            throw numeric_error("exact_moments: phi(" + std::to_string(n) +
                                ") is not positive");
        sum_log_phi += std::log(p);
        const double lv = log_gamma(n + 1.0) - sum_log_phi;
        out.push_back({n, lv, std::exp(lv)});
    }
    return out;
}

double phi_by_quadrature(const LevyModel& model, double x) {
    require_x_nonneg(x);
    if (x == 0.0) return 0.0;
    if (!model.has_density())
        return phi_from_tail_quadrature(model, x);
    auto f = [&](double v) {
        return -std::expm1(-x * v) * model.pi_density(v);
    };
    return integrate_scaled(f, x, kInf, "phi_by_quadrature");
}

double phi_derivative_by_quadrature(const LevyModel& model, double x,
                                    int order) {
    require_deriv_args(x, order);
    if (!model.has_density())
        return tail_phi_derivative([&](double u) { return model.pi_tail(u); },
                                   x, order, kInf);
    auto f = [&](double v) {
        const double e = std::exp(-x * v) * model.pi_density(v);
        return (order == 1) ? v * e : -v * v * e;
    };
    return integrate_scaled(f, x, kInf, "phi_derivative_by_quadrature");
}

double phi_from_tail_quadrature(const LevyModel& model, double x) {
    require_x_nonneg(x);
    return tail_phi([&](double u) { return model.pi_tail(u); }, x, kInf);
}

}  // namespace subexp
