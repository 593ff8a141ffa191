#include "subexp/monte_carlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "subexp/asymptotics.hpp"
#include "subexp/errors.hpp"
#include "subexp/parallel.hpp"
#include "subexp/quadrature.hpp"
#include "subexp/rng.hpp"
#include "subexp/special_functions.hpp"

namespace subexp {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Phi^{-1}(0.995), for 99% two-sided intervals
constexpr double kZ99 = 2.5758293035489004;
// largest affordable event rate for the compensated path
constexpr double kMaxEventRate = 1e6;
// runaway guard for a single path
constexpr std::size_t kMaxEventsPerReplicate = 20'000'000;
// summary moments are reduced in fixed chunks so totals are independent of
// the worker count
constexpr std::size_t kChunk = 4096;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Quantile table for jump sizes: pi_tail sampled on a geometric grid and
// inverted by bisection with log-log interpolation (exact for power tails,
// relative error ~1e-6 for exponential ones at 4096 cells).
struct JumpTable {
    std::vector<double> log_u;
    std::vector<double> log_tail;
    double mass = 0.0;

    double draw(double u01) const {
        const double lt = std::log(u01 * mass);
        auto it = std::lower_bound(log_tail.begin(), log_tail.end(), lt,
                                   std::greater<double>());
        const std::size_t j = static_cast<std::size_t>(it - log_tail.begin());
        if (j == 0) return std::exp(log_u.front());
        if (j >= log_tail.size()) return std::exp(log_u.back());
        const double t0 = log_tail[j - 1];
        const double t1 = log_tail[j];
        const double s = (t0 == t1) ? 0.0 : (lt - t0) / (t1 - t0);
        return std::exp(log_u[j - 1] + s * (log_u[j] - log_u[j - 1]));
    }
};

constexpr int kTableNodes = 4097;

// u_lo is the exact left end (the cutoff for conditional draws); mass the
// tail value there.  The right end is pushed to where the tail has dropped
// by 1e12, beyond which draws are clamped.
JumpTable build_jump_table(const LevyModel& model, double u_lo, double mass) {
    const double level = mass * 1e-12;
    double lo = u_lo;
    double hi = u_lo;
    double tail_hi = mass;
    for (int k = 0; k < 600 && tail_hi > level; ++k) {
        lo = hi;
        hi *= 2.0;
        tail_hi = model.pi_tail(hi);
    }
    if (tail_hi > level)
        throw numeric_error("jump table: tail does not decay", tail_hi);
    for (int k = 0; k < 200; ++k) {
        const double mid = std::sqrt(lo * hi);
        if (model.pi_tail(mid) > level)
            lo = mid;
        else
            hi = mid;
    }

    JumpTable table;
    table.mass = mass;
    table.log_u.resize(kTableNodes);
    table.log_tail.resize(kTableNodes);
    const double la = std::log(u_lo);
    const double lb = std::log(lo);
    double prev = mass;
    for (int i = 0; i < kTableNodes; ++i) {
        const double lu = la + (lb - la) * i / (kTableNodes - 1);
        double t = (i == 0) ? mass : model.pi_tail(std::exp(lu));
        t = std::min(t, prev);
        if (!(t > 0.0))
            throw numeric_error("jump table: tail vanished inside the grid",
                                t);
        table.log_u[i] = lu;
        table.log_tail[i] = std::log(t);
        prev = t;
    }
    return table;
}

// left end for unconditional draws: keep all but 1e-9 of the total mass
double unconditional_left_end(const LevyModel& model, double mass) {
    double u = 1.0;
    while (model.pi_tail(u) < mass * (1.0 - 1e-9) && u > 1e-250) u *= 0.125;
    return u;
}

double small_jump_drift(const LevyModel& model, double eps) {
    quad::Options opt;
    auto res = quad::integrate([&](double u) { return model.pi_tail(u); },
                               0.0, eps, opt);
    if (!res.converged)
        throw numeric_error("small-jump drift quadrature failed at eps = " +
                                fmt(eps),
                            res.error);
    return std::max(0.0, res.value - eps * model.pi_tail(eps));
}

[[noreturn]] void throw_event_budget(double eps) {
    throw resource_error(
        "path event budget exceeded (cutoff eps = " + fmt(eps) +
        "); increase eps or lower the horizon");
}

double replicate_affine(const JumpTable& table, double mass, double horizon,
                        rng::Xoshiro256pp& g) {
    double s = 0.0;
    double total = 0.0;
    std::size_t events = 0;
    while (true) {
        const double w = std::exp(-s);
        if (w < horizon) break;
        total += w * g.exponential(mass);
        s += table.draw(g.uniform_open());
        if (++events > kMaxEventsPerReplicate) throw_event_budget(0.0);
    }
    return total;
}

double replicate_compensated(const JumpTable& table, double lambda_eps,
                             double b_eps, double eps, double horizon,
                             rng::Xoshiro256pp& g) {
    double s = 0.0;
    double total = 0.0;
    std::size_t events = 0;
    while (true) {
        const double w = std::exp(-s);
        if (w < horizon) break;
        if (lambda_eps <= 0.0) {
            // pure drift from here on; the remaining integral is exact
            total += w / b_eps;
            break;
        }
        const double dt = g.exponential(lambda_eps);
        total += (b_eps > 0.0) ? w * (-std::expm1(-b_eps * dt)) / b_eps
                               : w * dt;
        s += b_eps * dt + table.draw(g.uniform_open());
        if (++events > kMaxEventsPerReplicate) throw_event_budget(eps);
    }
    return total;
}

void summarize_moments(const std::vector<double>& samples,
                       SampleSummary& out) {
    const std::size_t n = samples.size();
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::size_t c = 0; c < n; c += kChunk) {
        double c1 = 0.0, c2 = 0.0, c4 = 0.0;
        const std::size_t hi = std::min(n, c + kChunk);
        for (std::size_t i = c; i < hi; ++i) {
            const double v = samples[i];
            const double v2 = v * v;
            c1 += v;
            c2 += v2;
            c4 += v2 * v2;
        }
        s1 += c1;
        s2 += c2;
        s4 += c4;
    }
    const double dn = static_cast<double>(n);
    const double m1 = s1 / dn;
    const double m2 = s2 / dn;
    const double m4 = s4 / dn;
    const double se1 = std::sqrt(std::max(0.0, m2 - m1 * m1) / dn);
    const double se2 = std::sqrt(std::max(0.0, m4 - m2 * m2) / dn);
    out.moment_estimates = {{1, m1, se1}, {2, m2, se2}};
}

struct AbcParams {
    double a = 0.0, b = 0.0, c = 0.0;
};

AbcParams parse_abc(const LevyModel& model) {
    if (model.variant() != "abc")
        throw unsupported_regime_error(
            "exact_sampler_special: closed-form samplers exist only for the "
            "two-parameter special points of the abc family, got variant \"" +
            model.variant() + "\"");
    const auto j = nlohmann::json::parse(model.params_json());
    return {j.at("a").get<double>(), j.at("b").get<double>(),
            j.at("c").get<double>()};
}

// generalized Mittag-Leffler ML(alpha, alpha) via a tilted Kanter
// representation: with A(u) = [sin(au)^a sin((1-a)u)^{1-a} / sin u]^{1/(1-a)}
// on (0, pi), draw U with density proportional to A(u)^{a-1} by rejection
// (the weight a^a (1-a)^{1-a} sin u / [sin(au)^a sin((1-a)u)^{1-a}] is <= 1),
// G ~ Gamma(2-a), and return M = (G / A(U))^{1-a}.  Then
// E[M^r] = Gamma(a) r! / Gamma((1+r)a).
double mittag_leffler_draw(double alpha, rng::Xoshiro256pp& g) {
    const double lw0 =
        alpha * std::log(alpha) + (1.0 - alpha) * std::log1p(-alpha);
    double log_a_of_u = 0.0;
    for (;;) {
        const double u = kPi * g.uniform_open();
        const double lsa = std::log(std::sin(alpha * u));
        const double lsb = std::log(std::sin((1.0 - alpha) * u));
        const double ls = std::log(std::sin(u));
        const double logw = lw0 + ls - alpha * lsa - (1.0 - alpha) * lsb;
        if (std::log(g.uniform_open()) <= logw) {
            log_a_of_u = (alpha * lsa + (1.0 - alpha) * lsb - ls) /
                         (1.0 - alpha);
            break;
        }
    }
    const double gam = g.gamma(2.0 - alpha);
    return std::pow(gam, 1.0 - alpha) *
           std::exp(-(1.0 - alpha) * log_a_of_u);
}

// lower-triangular Cholesky factor of a dense SPD matrix, row-major
std::vector<double> cholesky(std::vector<double> a, std::size_t m) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * m + j];
            for (std::size_t k = 0; k < j; ++k)
                sum -= a[i * m + k] * a[j * m + k];
            if (i == j) {
                if (!(sum > 0.0))
                    throw numeric_error(
                        "exceedance covariance is not positive definite", sum);
                a[i * m + i] = std::sqrt(sum);
            } else {
                a[i * m + j] = sum / a[j * m + j];
            }
        }
        for (std::size_t j = i + 1; j < m; ++j) a[i * m + j] = 0.0;
    }
    return a;
}

void chol_solve(const std::vector<double>& l, std::size_t m,
                std::vector<double>& b) {
    for (std::size_t i = 0; i < m; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l[i * m + k] * b[k];
        b[i] = sum / l[i * m + i];
    }
    for (std::size_t ii = m; ii-- > 0;) {
        double sum = b[ii];
        for (std::size_t k = ii + 1; k < m; ++k) sum -= l[k * m + ii] * b[k];
        b[ii] = sum / l[ii * m + ii];
    }
}

std::vector<std::size_t> exceedance_counts(const std::vector<double>& sorted,
                                           const std::vector<double>& t_list) {
    std::vector<std::size_t> k(t_list.size());
    for (std::size_t i = 0; i < t_list.size(); ++i)
        k[i] = static_cast<std::size_t>(
            sorted.end() -
            std::upper_bound(sorted.begin(), sorted.end(), t_list[i]));
    return k;
}

void require_increasing(const std::vector<double>& t, const char* who) {
    if (t.size() < 2)
        throw config_error(std::string(who) +
                           ": need at least two window points");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1]))
            throw config_error(std::string(who) +
                               ": t values must be strictly increasing");
}

// sum_{m=2}^{b} C(b,m) B(m-2+alpha, b-m+beta): the three Beta-integral
// pieces of 1 - (1-x)^b - bx(1-x)^{b-1} against x^{alpha-3}(1-x)^{beta-1},
// each evaluated by analytic continuation (Gamma(alpha-2) < 0 for
// alpha in (1,2); the combination is positive)
double coalescent_total_weight(int b, double alpha, double beta) {
    int sa = 0, sab = 0;
    const double la = log_gamma_signed(alpha - 2.0, sa);
    const double lab = log_gamma_signed(alpha + beta - 2.0, sab);
    const double t1 = sa * sab * std::exp(la + log_gamma(beta) - lab);
    const double t2 =
        sa * std::exp(la + log_gamma(b + beta) -
                      log_gamma(b + alpha + beta - 2.0));
    const double t3 =
        b * std::exp(log_gamma(alpha - 1.0) + log_gamma(b - 1.0 + beta) -
                     log_gamma(b + alpha + beta - 2.0));
    return t1 - t2 - t3;
}

int draw_merger_size(int b, double alpha, double beta, double total,
                     rng::Xoshiro256pp& g) {
    double w = std::exp(std::log(0.5 * b * (b - 1.0)) + log_gamma(alpha) +
                        log_gamma(b - 2.0 + beta) -
                        log_gamma(b - 2.0 + alpha + beta));
    const double target = g.uniform_open() * total;
    double acc = w;
    int m = 2;
    while (acc < target && m < b) {
        w *= (b - m) * (m - 2.0 + alpha) /
             ((m + 1.0) * (b - m - 1.0 + beta));
        ++m;
        acc += w;
    }
    return m;
}

}  // namespace

double default_eps(const LevyModel& model) {
    if (std::isfinite(model.total_mass())) return 0.0;
    const double target = 1e-3 * model.phi(1.0);
    double lo = 1e-16;
    double hi = 1.0;
    while (small_jump_drift(model, hi) < target) {
        hi *= 10.0;
        if (hi > 1e6)
            throw numeric_error(
                "default_eps: small-jump drift never reaches its target",
                target);
    }
    for (int k = 0; k < 100; ++k) {
        const double mid = std::sqrt(lo * hi);
        if (small_jump_drift(model, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

double truncation_bias_bound(const LevyModel& model, double eps) {
    if (!(eps >= 0.0))
        throw config_error("truncation_bias_bound: eps must be >= 0");
    if (eps == 0.0) return 0.0;
    return small_jump_drift(model, eps) / model.phi(1.0);
}

SampleSummary sample_I(const LevyModel& model, const SimScheme& scheme,
                       std::size_t n, std::uint64_t seed,
                       std::vector<double>* raw) {
    if (n == 0) throw config_error("sample_I: n must be at least 1");
    if (!(scheme.horizon_tail_bound > 0.0 && scheme.horizon_tail_bound < 1.0))
        throw config_error("sample_I: horizon_tail_bound must lie in (0,1)");
    if (scheme.kind == SchemeKind::compensated_path) {
        if (!(scheme.eps > 0.0))
            throw config_error(
                "sample_I: the compensated path needs a positive eps");
    } else if (scheme.eps != 0.0) {
        throw config_error(
            "sample_I: eps is only meaningful for the compensated path");
    }

    std::vector<double> local;
    std::vector<double>& samples = raw ? *raw : local;

    if (scheme.kind == SchemeKind::exact_special) {
        samples = exact_sampler_special(model, n, seed);
    } else if (scheme.kind == SchemeKind::affine_recursion) {
        const double mass = model.total_mass();
        if (!std::isfinite(mass) || !(mass > 0.0))
            throw config_error(
                "sample_I: the affine recursion needs a finite jump rate; "
                "use the compensated path");
        const JumpTable table = build_jump_table(
            model, unconditional_left_end(model, mass), mass);
        const double horizon = scheme.horizon_tail_bound;
        samples.assign(n, 0.0);
        parallel_for(n, [&](std::size_t i) {
            rng::Xoshiro256pp g(seed, i);
            samples[i] = replicate_affine(table, mass, horizon, g);
        });
    } else {
        const double eps = scheme.eps;
        const double lambda_eps = model.pi_tail(eps);
        if (!std::isfinite(lambda_eps))
            throw numeric_error("sample_I: pi_tail(eps) is not finite",
                                lambda_eps);
        if (lambda_eps > kMaxEventRate)
            throw resource_error(
                "sample_I: cutoff eps = " + fmt(eps) + " gives jump rate " +
                fmt(lambda_eps) + " above the budget " + fmt(kMaxEventRate) +
                "; increase eps");
        const double b_eps = small_jump_drift(model, eps);
        if (lambda_eps <= 0.0 && b_eps <= 0.0)
            throw config_error(
                "sample_I: neither jumps above eps nor compensating drift; "
                "the model has no mass");
        JumpTable table;
        if (lambda_eps > 0.0)
            table = build_jump_table(model, eps, lambda_eps);
        const double horizon = scheme.horizon_tail_bound;
        samples.assign(n, 0.0);
        parallel_for(n, [&](std::size_t i) {
            rng::Xoshiro256pp g(seed, i);
            samples[i] = replicate_compensated(table, lambda_eps, b_eps, eps,
                                               horizon, g);
        });
    }

    SampleSummary out;
    out.n = n;
    out.seed = seed;
    out.truncation_eps = scheme.eps;
    summarize_moments(samples, out);
    return out;
}

std::vector<double> exact_sampler_special(const LevyModel& model,
                                          std::size_t n, std::uint64_t seed,
                                          SpecialBranch branch) {
    if (n == 0)
        throw config_error("exact_sampler_special: n must be at least 1");
    const AbcParams p = parse_abc(model);
    const bool ml_ok = std::abs(p.a - 1.0) <= 1e-12 &&
                       std::abs(p.b + p.c) <= 1e-12 && p.c > 0.0 && p.c < 1.0;
    const bool ep_ok = std::abs(p.c - 1.0 / (p.a + 1.0)) <= 1e-12 &&
                       std::abs(p.b + p.a / (p.a + 1.0)) <= 1e-12;
    SpecialBranch use = branch;
    if (use == SpecialBranch::automatic) {
        if (ml_ok)
            use = SpecialBranch::mittag_leffler;
        else if (ep_ok)
            use = SpecialBranch::exp_power;
        else
            throw unsupported_regime_error(
                "exact_sampler_special: (a,b,c) = (" + fmt(p.a) + ", " +
                fmt(p.b) + ", " + fmt(p.c) +
                ") matches neither special point (need b = -c with a = 1, or "
                "c = 1/(a+1) with b = -a/(a+1))");
    }
    if (use == SpecialBranch::mittag_leffler && !ml_ok)
        throw unsupported_regime_error(
            "exact_sampler_special: the Mittag-Leffler branch needs a = 1 "
            "and b = -c with c in (0,1)");
    if (use == SpecialBranch::exp_power && !ep_ok)
        throw unsupported_regime_error(
            "exact_sampler_special: the exponential-power branch needs "
            "c = 1/(a+1) and b = -a/(a+1)");

    const double phi1 = model.phi(1.0);
    std::vector<double> out(n);
    if (use == SpecialBranch::mittag_leffler) {
        // E[M] = Gamma(c)/Gamma(2c), so this scale gives E[I] = 1/phi(1)
        const double scale =
            std::exp(log_gamma(2.0 * p.c) - log_gamma(p.c)) / phi1;
        parallel_for(n, [&](std::size_t i) {
            rng::Xoshiro256pp g(seed, i);
            out[i] = scale * mittag_leffler_draw(p.c, g);
        });
    } else {
        // I proportional to E^{1/(a+1)}, E standard exponential
        const double q = 1.0 / (p.a + 1.0);
        const double scale = 1.0 / (phi1 * std::exp(log_gamma(1.0 + q)));
        parallel_for(n, [&](std::size_t i) {
            rng::Xoshiro256pp g(seed, i);
            out[i] = scale * std::pow(g.exponential(), q);
        });
    }
    return out;
}

std::vector<TailEstimate> tail_estimate(const std::vector<double>& samples,
                                        const std::vector<double>& t_list) {
    if (samples.empty())
        throw statistical_error("tail_estimate: no samples");
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    const auto k = exceedance_counts(sorted, t_list);
    const double n = static_cast<double>(sorted.size());
    const double z2 = kZ99 * kZ99;
    std::vector<TailEstimate> out;
    out.reserve(t_list.size());
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        const double p = static_cast<double>(k[i]) / n;
        const double denom = 1.0 + z2 / n;
        const double hw =
            kZ99 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
        out.push_back({t_list[i], p, hw});
    }
    return out;
}

CIFit fit_cI(const PsiEvaluator& psi, const std::vector<double>& samples,
             const std::vector<double>& t_window) {
    require_increasing(t_window, "fit_cI");
    if (samples.empty()) throw statistical_error("fit_cI: no samples");
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    const auto k = exceedance_counts(sorted, t_window);
    const std::size_t m = t_window.size();
    const std::size_t n = sorted.size();
    if (k.back() < 100)
        throw statistical_error(
            "fit_cI: only " + std::to_string(k.back()) +
            " exceedances above t = " + fmt(t_window.back()) +
            "; need at least 100");
    if (k.front() >= n)
        throw statistical_error(
            "fit_cI: the window starts below the whole sample");

    // y_i = ln p_i - tail_log_asym(t_i) ~ ln c_I, with the joint covariance
    // of nested exceedance events: Cov(ln p_i, ln p_j) = (1-p)/(n p) at the
    // smaller of the two thresholds
    std::vector<double> y(m), v(m);
    double tbar = 0.0;
    for (double t : t_window) tbar += t;
    tbar /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double p = static_cast<double>(k[i]) / static_cast<double>(n);
        y[i] = std::log(p) - tail_log_asym(psi, t_window[i]);
        v[i] = (1.0 / p - 1.0) / static_cast<double>(n);
    }

    std::vector<double> sigma(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            sigma[i * m + j] = v[std::min(i, j)];
    const auto l = cholesky(std::move(sigma), m);

    // GLS for y = b0 + b1 (t - tbar)
    std::vector<double> x0(m, 1.0), x1(m), yy(y);
    for (std::size_t i = 0; i < m; ++i) x1[i] = t_window[i] - tbar;
    chol_solve(l, m, x0);
    chol_solve(l, m, x1);
    chol_solve(l, m, yy);
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, r0 = 0.0, r1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        a00 += 1.0 * x0[i];
        a01 += (t_window[i] - tbar) * x0[i];
        a11 += (t_window[i] - tbar) * x1[i];
        r0 += y[i] * x0[i];
        r1 += y[i] * x1[i];
    }
    const double det = a00 * a11 - a01 * a01;
    if (!(det > 0.0))
        throw numeric_error("fit_cI: degenerate design matrix", det);
    const double b0 = (a11 * r0 - a01 * r1) / det;
    const double b1 = (a00 * r1 - a01 * r0) / det;
    const double var0 = a11 / det;
    const double var1 = a00 / det;

    CIFit fit;
    fit.c_hat = std::exp(b0);
    fit.std_error = fit.c_hat * std::sqrt(var0);
    fit.slope = b1;
    fit.slope_z = b1 / std::sqrt(var1);
    fit.exceedances = k.back();
    return fit;
}

std::vector<SlopeCheck> tail_slope_check(const PsiEvaluator& psi,
                                         const std::vector<double>& samples,
                                         const std::vector<double>& t_list) {
    require_increasing(t_list, "tail_slope_check");
    if (samples.empty())
        throw statistical_error("tail_slope_check: no samples");
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    const auto k = exceedance_counts(sorted, t_list);
    if (k.back() == 0)
        throw statistical_error(
            "tail_slope_check: no exceedances above t = " +
            fmt(t_list.back()));
    const double n = static_cast<double>(sorted.size());
    std::vector<SlopeCheck> out;
    out.reserve(t_list.size() - 1);
    for (std::size_t i = 0; i + 1 < t_list.size(); ++i) {
        const double p0 = static_cast<double>(k[i]) / n;
        const double p1 = static_cast<double>(k[i + 1]) / n;
        const double dt = t_list[i + 1] - t_list[i];
        SlopeCheck s;
        s.t_mid = 0.5 * (t_list[i] + t_list[i + 1]);
        s.slope = (std::log(p0) - std::log(p1)) / dt;
        s.target = psi.psi(s.t_mid) / s.t_mid;
        // the two exceedance events are nested, so the difference of the
        // log-frequencies has variance (1/p1 - 1/p0)/n
        s.half_width =
            kZ99 * std::sqrt((1.0 / p1 - 1.0 / p0) / n) / dt;
        out.push_back(s);
    }
    return out;
}

std::vector<double> beta_coalescent_collisions(int n_particles, double alpha,
                                               double beta,
                                               std::size_t n_runs,
                                               std::uint64_t seed) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw config_error(
            "beta_coalescent_collisions: alpha must lie in (1,2)");
    if (!(beta > 0.0))
        throw config_error("beta_coalescent_collisions: beta must be > 0");
    if (n_particles < 2)
        throw config_error(
            "beta_coalescent_collisions: need at least 2 particles");
    if (n_runs == 0)
        throw config_error("beta_coalescent_collisions: n_runs must be >= 1");
    std::vector<double> out(n_runs);
    parallel_for(n_runs, [&](std::size_t r) {
        rng::Xoshiro256pp g(seed, r);
        int b = n_particles;
        double count = 0.0;
        while (b >= 2) {
            const double total = coalescent_total_weight(b, alpha, beta);
            const int m = draw_merger_size(b, alpha, beta, total, g);
            b -= m - 1;
            count += 1.0;
        }
        out[r] = count;
    });
    return out;
}

double beta_coalescent_scaling(double alpha, double beta, int n_particles) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw config_error("beta_coalescent_scaling: alpha must lie in (1,2)");
    if (!(beta > 0.0))
        throw config_error("beta_coalescent_scaling: beta must be > 0");
    if (n_particles < 2)
        throw config_error(
            "beta_coalescent_scaling: need at least 2 particles");
    quad::Options opt;
    auto res = quad::integrate(
        [&](double x) {
            return std::pow(x, alpha - 3.0) * std::pow(1.0 - x, beta - 1.0);
        },
        1.0 / n_particles, 1.0, opt);
    if (!res.converged)
        throw numeric_error("beta_coalescent_scaling: quadrature failed",
                            res.error);
    return (2.0 - alpha) * res.value;
}

std::vector<double> barrier_walk_absorption(int n_barrier, double c,
                                            std::size_t n_runs,
                                            std::uint64_t seed) {
    if (!(c > 0.0 && c < 1.0))
        throw config_error("barrier_walk_absorption: c must lie in (0,1)");
    if (n_barrier < 1)
        throw config_error("barrier_walk_absorption: barrier must be >= 1");
    if (n_runs == 0)
        throw config_error("barrier_walk_absorption: n_runs must be >= 1");
    std::vector<double> out(n_runs);
    parallel_for(n_runs, [&](std::size_t r) {
        rng::Xoshiro256pp g(seed, r);
        long long room = n_barrier;
        double steps = 0.0;
        while (room > 0) {
            // eta | eta <= room via inversion of P(eta >= j) = j^{-c}:
            // V uniform on ((room+1)^{-c}, 1], eta = floor(V^{-1/c})
            const double u = g.uniform_open();
            const double w = std::log1p(
                u * std::expm1(c * std::log1p(static_cast<double>(room))));
            long long eta = static_cast<long long>(
                std::floor((room + 1.0) * std::exp(-w / c)));
            eta = std::clamp(eta, 1LL, room);
            room -= eta;
            steps += 1.0;
        }
        out[r] = steps;
    });
    return out;
}

double barrier_walk_scaling(double c, int n_barrier) {
    if (!(c > 0.0 && c < 1.0))
        throw config_error("barrier_walk_scaling: c must lie in (0,1)");
    if (n_barrier < 1)
        throw config_error("barrier_walk_scaling: barrier must be >= 1");
    return std::pow(static_cast<double>(n_barrier), c) / c;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw statistical_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical_1pct(std::size_t n, std::size_t m) {
    if (n == 0 || m == 0)
        throw statistical_error("ks_critical_1pct: empty sample");
    const double c = std::sqrt(-0.5 * std::log(0.005));
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    return c * std::sqrt((dn + dm) / (dn * dm));
}

namespace {
constexpr char kMagic[4] = {'S', 'U', 'B', 'X'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void write_samples(const std::vector<double>& samples,
                   const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw config_error("write_samples: cannot open " + path);
    const std::uint32_t version = kFormatVersion;
    const std::uint64_t count = samples.size();
    f.write(kMagic, 4);
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&count), 8);
    f.write(reinterpret_cast<const char*>(samples.data()),
            static_cast<std::streamsize>(8 * samples.size()));
    if (!f)
        throw config_error("write_samples: short write to " + path);
}

std::vector<double> read_samples(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw config_error("read_samples: cannot open " + path);
    char magic[4] = {};
    std::uint32_t version = 0;
    std::uint64_t count = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&count), 8);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw config_error("read_samples: " + path + " is not a sample file");
    if (version != kFormatVersion)
        throw config_error("read_samples: unsupported format version " +
                           std::to_string(version));
    std::vector<double> out(count);
    f.read(reinterpret_cast<char*>(out.data()),
           static_cast<std::streamsize>(8 * count));
    if (!f || static_cast<std::uint64_t>(f.gcount()) != 8 * count)
        throw config_error("read_samples: truncated sample file " + path);
    return out;
}

std::string summary_to_json(const SampleSummary& summary) {
    nlohmann::json j;
    j["n"] = summary.n;
    j["seed"] = summary.seed;
    j["truncation_eps"] = summary.truncation_eps;
    j["moments"] = nlohmann::json::array();
    for (const auto& m : summary.moment_estimates)
        j["moments"].push_back({{"order", m.order},
                                {"mean", m.mean},
                                {"std_error", m.std_error}});
    j["tails"] = nlohmann::json::array();
    for (const auto& t : summary.tail_estimates)
        j["tails"].push_back({{"t", t.t},
                              {"p_hat", t.p_hat},
                              {"half_width", t.half_width}});
    return j.dump(2);
}

}  // namespace subexp
