#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "subexp/errors.hpp"

// Adaptive Gauss-Kronrod 7-15 quadrature.  Intervals are refined worst-first
// until the summed error estimate meets max(abs_tol, rel_tol*|value|).
// Endpoints are never evaluated, so integrable endpoint singularities
// (x^s with s > -1) are handled by geometric refinement toward the edge.

namespace subexp::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    std::size_t max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod nodes (positive half, descending) and weights,
// with the embedded 7-point Gauss weights on the odd-indexed nodes.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
    const double h = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(mid - h * kXgk[i]);
        fv[14 - i] = f(mid + h * kXgk[i]);
    }
    fv[7] = f(mid);
    double resg = 0.0, resk = 0.0, resabs = 0.0;
    for (int i = 0; i < 8; ++i) {
        double fsum = (i == 7) ? fv[7] : fv[i] + fv[14 - i];
        double asum = (i == 7) ? std::abs(fv[7])
                               : std::abs(fv[i]) + std::abs(fv[14 - i]);
        resk += kWgk[i] * fsum;
        resabs += kWgk[i] * asum;
        if (i % 2 == 1) resg += kWg[i / 2] * fsum;
    }
    const double reskh = resk * 0.5;
    double resasc = 0.0;
    for (int i = 0; i < 8; ++i) {
        double asum = (i == 7) ? std::abs(fv[7] - reskh)
                               : std::abs(fv[i] - reskh) +
                                     std::abs(fv[14 - i] - reskh);
        resasc += kWgk[i] * asum;
    }
    value = resk * h;
    err = std::abs((resk - resg) * h);
    resasc *= std::abs(h);
    resabs *= std::abs(h);
    // rescaled error estimate: sharp when the rule has actually resolved the
    // integrand, conservative when the local variation dominates
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    const double uflow = std::numeric_limits<double>::min();
    if (resabs > uflow / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
}

struct Interval {
    double a, b, value, error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace detail

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
    Result res;
    if (!(a < b)) {
        res.value = 0.0;
        res.error = 0.0;
        res.converged = true;
        return res;
    }
    std::priority_queue<detail::Interval> heap;
    detail::Interval root{a, b, 0.0, 0.0};
    detail::gk15(f, a, b, root.value, root.error);
    res.evaluations = 15;
    heap.push(root);
    double total_value = root.value;
    double total_error = root.error;
    const double min_width = 64.0 * std::numeric_limits<double>::epsilon();
    while (true) {
        if (!std::isfinite(total_value)) break;
        const double target =
            std::max(opt.abs_tol, opt.rel_tol * std::abs(total_value));
        if (total_error <= target) {
            res.converged = true;
            break;
        }
        if (heap.size() >= opt.max_intervals) break;
        detail::Interval worst = heap.top();
        if (worst.b - worst.a <=
            min_width * std::max(std::abs(worst.a), std::abs(worst.b))) {
            // Cannot refine further in double precision.  Intervals touching
            // zero keep full resolution, so singularities at the origin can
            // be chased as deep as the error budget demands.
            break;
        }
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        detail::Interval left{worst.a, m, 0.0, 0.0};
        detail::Interval right{m, worst.b, 0.0, 0.0};
        detail::gk15(f, left.a, left.b, left.value, left.error);
        detail::gk15(f, right.a, right.b, right.value, right.error);
        res.evaluations += 30;
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    res.value = total_value;
    res.error = total_error;
    if (!std::isfinite(total_value) || !std::isfinite(total_error))
        res.converged = false;
    return res;
}

// Integral over (a, infinity), a > 0, via v = a/s, s in (0,1).  Handles both
// exponentially and polynomially decaying tails (a power tail v^{-p} becomes
// an integrable endpoint singularity s^{p-2}).
template <class F>
Result integrate_tail(F&& f, double a, const Options& opt = {}) {
    if (!(a > 0.0)) throw domain_error("integrate_tail requires a > 0");
    auto g = [&f, a](double s) { return f(a / s) * a / (s * s); };
    return integrate(g, 0.0, 1.0, opt);
}

// Integral over (0, infinity), split at v = 1.
template <class F>
Result integrate_positive_axis(F&& f, const Options& opt = {}) {
    Result head = integrate(f, 0.0, 1.0, opt);
    Result tail = integrate_tail(f, 1.0, opt);
    Result res;
    res.value = head.value + tail.value;
    res.error = head.error + tail.error;
    res.evaluations = head.evaluations + tail.evaluations;
    res.converged = head.converged && tail.converged;
    return res;
}

template <class F>
double integrate_checked(F&& f, double a, double b, const Options& opt,
                         const std::string& what) {
    Result r = integrate(std::forward<F>(f), a, b, opt);
    if (!r.converged)
        throw numeric_error("quadrature failed for " + what, r.error);
    return r.value;
}

}  // namespace subexp::quad
