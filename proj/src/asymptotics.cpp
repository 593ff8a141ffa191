#include "subexp/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subexp/errors.hpp"
#include "subexp/quadrature.hpp"
#include "subexp/rng.hpp"
#include "subexp/special_functions.hpp"

namespace subexp {

namespace {

quad::Options form_quad_options() {
    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-14;
    opt.max_intervals = 4000;
    return opt;
}

double require_positive_gamma(double y) {
    return std::exp(log_gamma(y));
}

// t^{pref} exp(sum c_i t^{p_i}) assembled into a form; powers must decrease
// strictly and the leading exponential coefficient must be negative
AsymptoticForm power_form(AsymptoticKind kind, double pref,
                          std::vector<std::pair<double, double>> terms) {
    std::erase_if(terms, [](const auto& t) { return t.first == 0.0; });
    for (std::size_t i = 1; i < terms.size(); ++i) {
        if (!(terms[i].second < terms[i - 1].second))
            throw domain_error(
                "asymptotic form: exponent powers must decrease strictly");
    }
    if (!terms.empty() && !(terms.front().first < 0.0))
        throw domain_error(
            "asymptotic form: leading exponent coefficient must be negative");
    AsymptoticForm form;
    form.kind = kind;
    form.prefactor_exponent = pref;
    form.exp_terms = terms;
    form.log_value_fn = [pref, terms](double t) {
        if (!(t > 0.0))
            throw domain_error("asymptotic form: t must be positive");
        double s = pref * std::log(t);
        for (const auto& [c, p] : terms) s += c * std::pow(t, p);
        return s;
    };
    return form;
}

struct AbcParams {
    double a, b, c;
    double scale;  // the model's Levy measure is scale * (a,b,c) measure
};

AbcParams abc_params(const LevyModel& model) {
    const auto j = nlohmann::json::parse(model.params_json());
    if (model.variant() == "abc")
        return {j.at("a").get<double>(), j.at("b").get<double>(),
                j.at("c").get<double>(), 1.0};
    if (model.variant() == "barrier_walk") {
        const double c = j.at("c").get<double>();
        return {1.0 / c, -c, c, 1.0};
    }
    const double alpha = j.at("alpha").get<double>();
    const double beta = j.at("beta").get<double>();
    return {beta / (2.0 - alpha), alpha - 2.0, 2.0 - alpha,
            (2.0 - alpha) / require_positive_gamma(alpha)};
}

// P(I(s pi) > t) = P(I(pi) > s t): a measure rescaling moves s into the
// exponential coefficients and the constant, leaving the powers alone
AsymptoticForm rescale_measure(AsymptoticForm form, double s) {
    if (s == 1.0) return form;
    for (auto& [c, p] : form.exp_terms) c *= std::pow(s, p);
    return power_form(form.kind, form.prefactor_exponent,
                      std::move(form.exp_terms));
}

AsymptoticForm closed_form_abc(const LevyModel& model, AsymptoticKind kind) {
    const auto [a, b, c, scale] = abc_params(model);
    const double ac = a * c;
    AsymptoticForm form;
    if (b >= -0.5 && b <= 0.5) {
        throw unsupported_regime_error(
            "abc asymptotics: b in [-1/2, 1/2] introduces additional power "
            "contributions in or in front of the exponential; no general "
            "closed form (b = " +
            std::to_string(b) + ")");
    } else if (b < -0.5) {
        int sg = 1;
        const double abs_gamma_b = std::exp(log_gamma_signed(b, sg));
        const double lead = -(1.0 + b) *
                            std::pow(abs_gamma_b / std::pow(c, b), 1.0 / (1.0 + b));
        const double linear =
            abs_gamma_b * gamma_over_gamma(ac, b + ac) / (1.0 + b);
        double pref = (b * a + b * (b - 1.0) / (2.0 * c) + 0.5 * b) / (1.0 + b);
        if (kind == AsymptoticKind::density) pref -= b / (1.0 + b);
        form = power_form(kind, pref,
                          {{lead, 1.0 / (1.0 + b)}, {linear, 1.0}});
    } else if (b < 1.0) {
        const double total =
            std::exp(log_gamma(ac) + log_gamma(b) - log_gamma(ac + b));
        const double second = std::pow(1.0 / (total * c), b) *
                              require_positive_gamma(b) / (1.0 - b);
        form = power_form(kind, 0.0, {{-total, 1.0}, {second, 1.0 - b}});
    } else if (b == 1.0) {
        form = power_form(kind, a, {{-1.0 / ac, 1.0}});
    } else {
        const double total =
            std::exp(log_gamma(ac) + log_gamma(b) - log_gamma(ac + b));
        form = power_form(kind, 0.0, {{-total, 1.0}});
    }
    return rescale_measure(std::move(form), scale);
}

// finite measure with pi(0,u) = sum c_i u^{g_i} + O(u^{1+eps}), g_p = 1
AsymptoticForm closed_form_compound(const LevyModel& model,
                                    AsymptoticKind kind) {
    const auto expansion = model.lower_expansion();
    if (!expansion || expansion->empty())
        throw unsupported_regime_error(
            "compound_poisson asymptotics: no small-u tail expansion "
            "available for this model");
    const auto& terms = *expansion;
    for (std::size_t i = 1; i < terms.size(); ++i) {
        if (!(terms[i].exponent > terms[i - 1].exponent))
            throw domain_error(
                "compound_poisson asymptotics: expansion exponents must "
                "increase strictly");
    }
    if (std::abs(terms.back().exponent - 1.0) > 1e-12)
        throw domain_error(
            "compound_poisson asymptotics: expansion must close with the "
            "u^1 term");
    if (terms.size() > 1 && !(terms.front().exponent > 0.5))
        throw unsupported_regime_error(
            "compound_poisson asymptotics: expansion exponents <= 1/2 "
            "introduce additional power contributions; no general closed "
            "form");
    const double m = model.total_mass();
    if (!std::isfinite(m))
        throw domain_error("compound_poisson asymptotics: measure not finite");
    std::vector<std::pair<double, double>> exps;
    exps.emplace_back(-m, 1.0);
    for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
        const double g = terms[i].exponent;
        const double coef = terms[i].coeff * std::pow(m, -g) *
                            require_positive_gamma(1.0 + g) / (1.0 - g);
        exps.emplace_back(coef, 1.0 - g);
    }
    AsymptoticForm form =
        power_form(kind, terms.back().coeff / m, std::move(exps));
    if (terms.size() == 1 && terms.back().coeff > 0.0) {
        form.constant = mz_constant(model, terms.back().coeff, 1.0);
        form.constant_known = true;
    }
    return form;
}

// pibar(u) = sum c_i u^{-g_i} near 0, g_0 in (0,1), closing term g_p = g_0 - 1
AsymptoticForm closed_form_power_tail(const LevyModel& model,
                                      AsymptoticKind kind) {
    const auto expansion = model.lower_expansion();
    if (!expansion || expansion->size() < 2)
        throw domain_error(
            "infinite_power_tail asymptotics: expansion terms missing");
    const auto& terms = *expansion;
    const double g0 = terms.front().exponent;
    if (terms.size() > 2 && !(terms[1].exponent < g0 - 0.5))
        throw unsupported_regime_error(
            "infinite_power_tail asymptotics: exponents >= gamma0 - 1/2 "
            "introduce additional power contributions; no general closed "
            "form");
    const double gp = terms.back().exponent;
    const double cp = terms.back().coeff;
    const double om = 1.0 - g0;
    double pref =
        -g0 / (2.0 * om) - cp * require_positive_gamma(1.0 - gp) / om;
    if (kind == AsymptoticKind::density) pref += g0 / om;
    std::vector<std::pair<double, double>> exps;
    exps.emplace_back(-om, 1.0 / om);
    for (std::size_t i = 1; i + 1 < terms.size(); ++i) {
        const double gi = terms[i].exponent;
        const double coef = -terms[i].coeff * require_positive_gamma(1.0 - gi) /
                            (om + gi);
        exps.emplace_back(coef, (om + gi) / om);
    }
    return power_form(kind, pref, std::move(exps));
}

AsymptoticForm closed_form_stable(const LevyModel& model, AsymptoticKind kind) {
    const auto j = nlohmann::json::parse(model.params_json());
    const double alpha = j.at("alpha").get<double>();
    const double om = 1.0 - alpha;
    const double pref = (kind == AsymptoticKind::density)
                            ? alpha / (2.0 * om)
                            : -alpha / (2.0 * om);
    return power_form(kind, pref, {{-om, 1.0 / om}});
}

// (ln t)^{-1/2} exp( int_2^t W_{-1}(-e^{-1/r}/r) dr + ln t ); no power form
// exists since the exponent grows like -t ln t
AsymptoticForm closed_form_gamma(AsymptoticKind kind) {
    AsymptoticForm form;
    form.kind = kind;
    form.prefactor_exponent = 0.0;
    form.log_value_fn = [kind](double t) {
        if (!(t > 2.0))
            throw domain_error(
                "gamma asymptotics: need t > 2, got " + std::to_string(t));
        auto w = [](double r) {
            return lambert_w_minus1(-std::exp(-1.0 / r) / r);
        };
        auto res = quad::integrate(w, 2.0, t, form_quad_options());
        if (!res.converged)
            throw numeric_error("gamma asymptotics: exponent quadrature failed",
                                res.error);
        double v = -0.5 * std::log(std::log(t)) + res.value + std::log(t);
        if (kind == AsymptoticKind::density)
            v += std::log(gamma_psi_closed(t) / t);
        return v;
    };
    return form;
}

}  // namespace

double AsymptoticForm::log_value(double t) const {
    if (!log_value_fn)
        throw domain_error("asymptotic form: no evaluator attached");
    return log_value_fn(t);
}

std::string AsymptoticForm::to_json() const {
    nlohmann::json j;
    j["prefactor_exponent"] = prefactor_exponent;
    auto arr = nlohmann::json::array();
    for (const auto& [c, p] : exp_terms)
        arr.push_back(nlohmann::json::array({c, p}));
    j["exp_terms"] = std::move(arr);
    j["constant_known"] = constant_known;
    if (constant)
        j["constant"] = *constant;
    else
        j["constant"] = nullptr;
    return j.dump();
}

double tail_log_asym(const PsiEvaluator& ev, double t) {
    if (!(t > ev.x_psi() + 1.0))
        throw domain_error("tail_log_asym: need t > x_psi + 1, got " +
                           std::to_string(t));
    return std::log(t) + 0.5 * std::log(ev.psi_prime(t)) -
           std::log(ev.psi(t)) - ev.exponent_integral(t);
}

double density_log_asym(const PsiEvaluator& ev, double t) {
    if (!(t > ev.x_psi() + 1.0))
        throw domain_error("density_log_asym: need t > x_psi + 1, got " +
                           std::to_string(t));
    return 0.5 * std::log(ev.psi_prime(t)) - ev.exponent_integral(t);
}

double fprime_expansion(const PsiEvaluator& ev, double x) {
    const double psi = ev.psi(x);
    const double dpsi = ev.psi_prime(x);
    const double ddpsi = ev.psi_second(x);
    return psi / x + dpsi / psi - 1.0 / x - ddpsi / (2.0 * dpsi);
}

AsymptoticForm closed_form(const LevyModel& model, AsymptoticKind kind) {
    if (kind == AsymptoticKind::ssmp_moment)
        throw domain_error(
            "closed_form: ssmp_moment forms are evaluator-based, not closed");
    const std::string& v = model.variant();
    if (v == "stable") return closed_form_stable(model, kind);
    if (v == "gamma") return closed_form_gamma(kind);
    if (v == "abc" || v == "barrier_walk" || v == "beta_coalescent")
        return closed_form_abc(model, kind);
    if (v == "compound_poisson") return closed_form_compound(model, kind);
    if (v == "infinite_power_tail") return closed_form_power_tail(model, kind);
    throw unsupported_regime_error("closed_form: no expansion for variant '" +
                                   v + "'");
}

double mz_constant(const LevyModel& model, double b, double delta, int terms) {
    if (!(b >= 0.0) || !std::isfinite(b))
        throw domain_error("mz_constant: b must be >= 0");
    if (!(delta > 0.0))
        throw domain_error("mz_constant: delta must be > 0");
    if (terms < 50)
        throw domain_error("mz_constant: need at least 50 product terms");
    const double mass = model.total_mass();
    if (!std::isfinite(mass) || !(mass > 0.0))
        throw domain_error("mz_constant: Levy measure must be finite");
    if (b == 0.0) return 1.0;

    // ln c = b ln|pi| + b gamma_E - sum_k a_k,
    // a_k = ln(phi(k)/|pi|) + b/k = O(k^{-2}) under the u-linear tail
    auto term = [&](int k) {
        const double ratio = model.phi(static_cast<double>(k)) / mass;
        if (!(ratio > 0.0))
            throw domain_error(
                "mz_constant: product factor vanished at k = " +
                std::to_string(k));
        return std::log(ratio) + b / static_cast<double>(k);
    };
    double sum = 0.0;
    for (int k = 1; k <= terms; ++k) sum += term(k);

    // a_k ~ A/k^2 + B/k^3: fit (A, B) on two short windows and add the closed
    // tail sums  sum_{k>K} k^{-2} = psi1(K+1),  sum_{k>K} k^{-3} ~ 1/(2K^2)
    auto window = [&](int center) {
        double r = 0.0;
        for (int k = center - 2; k <= center + 2; ++k)
            r += term(k) * static_cast<double>(k) * static_cast<double>(k);
        return r / 5.0;
    };
    const int k2 = std::max(25, (7 * terms) / 10);
    const double r1 = window(terms - 2);
    const double r2 = window(k2);
    const double x1 = 1.0 / static_cast<double>(terms - 2);
    const double x2 = 1.0 / static_cast<double>(k2);
    const double fitted_b = (r1 - r2) / (x1 - x2);
    const double fitted_a = r1 - fitted_b * x1;
    const double kk = static_cast<double>(terms);
    const double tail2 = trigamma(kk + 1.0);
    const double tail3 = 0.5 / (kk * kk) - 0.5 / (kk * kk * kk);
    sum += fitted_a * tail2 + fitted_b * tail3;

    return std::exp(b * std::log(mass) + b * euler_gamma - sum);
}

namespace {

// inverse of the normalized Levy tail: X with P(X > u) = pibar(u)/|pi|
double sample_jump(const LevyModel& model, double mass, rng::Xoshiro256pp& g) {
    const double target = g.uniform_open() * mass;
    double hi = 1.0;
    int guard = 0;
    while (model.pi_tail(hi) > target) {
        hi *= 2.0;
        if (++guard > 1000)
            throw numeric_error("mz lighttail: jump tail never crosses level",
                                hi);
    }
    double lo = 0.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (model.pi_tail(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// I = sum_j e^{-S_{j-1}} E_j with E_j ~ Exp(|pi|), S_j the jump partial sums
double sample_exponential_functional(const LevyModel& model, double mass,
                                     rng::Xoshiro256pp& g) {
    double acc = 0.0;
    double weight = 1.0;
    int guard = 0;
    while (weight > 1e-12) {
        acc += weight * g.exponential(mass);
        weight *= std::exp(-sample_jump(model, mass, g));
        if (++guard > 100000)
            throw numeric_error("mz lighttail: path failed to decay", weight);
    }
    return acc;
}

}  // namespace

LightTailEstimate mz_constant_lighttail(const LevyModel& model, long n_samples,
                                        std::uint64_t seed) {
    if (n_samples <= 0)
        throw statistical_error("mz_constant_lighttail: need n_samples >= 1");
    const double mass = model.total_mass();
    if (!std::isfinite(mass) || !(mass > 0.0))
        throw domain_error("mz_constant_lighttail: Levy measure must be finite");

    double mean = 0.0, m2 = 0.0, max_term = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        rng::Xoshiro256pp g(seed, static_cast<std::uint64_t>(i));
        const double x = sample_jump(model, mass, g);
        const double ival = sample_exponential_functional(model, mass, g);
        const double term = std::exp(mass * std::exp(-x) * ival);
        max_term = std::max(max_term, term);
        const double d = term - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (term - mean);
    }
    LightTailEstimate out;
    out.n = n_samples;
    out.value = mean;
    out.std_error =
        (n_samples > 1)
            ? std::sqrt(m2 / (static_cast<double>(n_samples) *
                              static_cast<double>(n_samples - 1)))
            : std::numeric_limits<double>::infinity();
    out.reliable = std::isfinite(mean) && n_samples >= 100 &&
                   max_term <= 0.05 * mean * static_cast<double>(n_samples);
    return out;
}

double ssmp_moment_log_asym(const PsiEvaluator& ev, double alpha, double a,
                            double t) {
    if (!(alpha > 0.0))
        throw domain_error("ssmp_moment_log_asym: alpha must be > 0");
    if (!(a >= 0.0))
        throw domain_error("ssmp_moment_log_asym: a must be >= 0");
    const double at = alpha * t;
    if (!(at > ev.x_psi() + 1.0))
        throw domain_error(
            "ssmp_moment_log_asym: need alpha t > x_psi + 1, got alpha t = " +
            std::to_string(at));
    return (1.0 + a / alpha) * std::log(t / ev.psi(at)) +
           0.5 * std::log(ev.psi_prime(at)) -
           ev.exponent_integral(at) / alpha;
}

}  // namespace subexp
