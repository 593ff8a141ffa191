#include "subexp/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>

#include "subexp/errors.hpp"
#include "subexp/parallel.hpp"
#include "subexp/quadrature.hpp"

namespace subexp {

namespace {

constexpr double kKillLog = 36.841361487904734;  // -ln(1e-16)
constexpr double kHorizonLog = 27.631021115928547;  // -ln(1e-12)

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

quad::Options theta_quad_options() {
    quad::Options opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-13;
    opt.max_intervals = 2000;
    return opt;
}

double resolve_power(const GridFunction& g) {
    if (std::isfinite(g.right_exponent)) return g.right_exponent;
    const std::size_t m = g.size();
    const double vl = g.values[m - 1];
    const double vp = g.values[m - 2];
    if (!(vl > 0.0) || !(vp > 0.0)) return 0.0;
    return std::log(vl / vp) / std::log(g.grid[m - 1] / g.grid[m - 2]);
}

// cumulative trapezoid of a piecewise-linear grid function, with the
// constant-left / power-right extensions folded in so that
// between(lo, hi) = int_lo^hi g for any 0 <= lo <= hi
class TrapezoidIntegrator {
  public:
    explicit TrapezoidIntegrator(const GridFunction& g)
        : g_(g), power_(resolve_power(g)) {
        cum_.resize(g.size());
        cum_[0] = 0.0;
        for (std::size_t i = 1; i < g.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (g.grid[i] - g.grid[i - 1]) *
                                        (g.values[i] + g.values[i - 1]);
    }

    double between(double lo, double hi) const {
        return cum_at(hi) - cum_at(lo);
    }

    // smallest y >= x with int_x^y g >= target; +inf when the extrapolated
    // integral never accumulates that much
    double reach(double x, double target) const {
        const double base = cum_at(x);
        double hi = x;
        int guard = 0;
        while (cum_at(hi) - base < target) {
            hi *= 2.0;
            if (++guard > 200)
                return std::numeric_limits<double>::infinity();
        }
        double lo = x;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            (cum_at(mid) - base < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

  private:
    double cum_at(double x) const {
        const auto& xs = g_.grid;
        const auto& vs = g_.values;
        if (x <= xs.front()) return vs.front() * (x - xs.front());
        if (x >= xs.back()) return cum_.back() + tail_integral(x);
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double w = (x - xs[j]) / (xs[j + 1] - xs[j]);
        const double gx = vs[j] + w * (vs[j + 1] - vs[j]);
        return cum_[j] + 0.5 * (x - xs[j]) * (vs[j] + gx);
    }

    double tail_integral(double x) const {
        const double xe = g_.grid.back();
        const double ve = g_.values.back();
        if (ve == 0.0) return 0.0;
        const double p1 = power_ + 1.0;
        if (std::abs(p1) < 1e-12) return ve * xe * std::log(x / xe);
        return ve * xe * (std::pow(x / xe, p1) - 1.0) / p1;
    }

    const GridFunction& g_;
    double power_;
    std::vector<double> cum_;
};

GridFunction like(const GridFunction& g) {
    GridFunction out = g;
    out.values.assign(g.size(), 0.0);
    return out;
}

}  // namespace

void GridFunction::validate() const {
    if (grid.size() < 2)
        throw config_error("grid function: need at least 2 points");
    if (grid.size() != values.size())
        throw config_error("grid function: grid/values size mismatch");
    if (!(grid.front() > 0.0))
        throw config_error("grid function: abscissae must be positive");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw config_error(
                "grid function: abscissae must increase strictly");
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw config_error("grid function: values must be finite >= 0");
}

double GridFunction::value_at(double x) const {
    if (x <= grid.front()) return values.front();
    if (x >= grid.back()) {
        const double ve = values.back();
        if (ve == 0.0) return 0.0;
        return ve * std::pow(x / grid.back(), resolve_power(*this));
    }
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double w = (x - grid[j]) / (grid[j + 1] - grid[j]);
    return values[j] + w * (values[j + 1] - values[j]);
}

std::size_t GridFunction::trusted_size() const {
    const double cut = grid.back() / 10.0;
    std::size_t n = 0;
    while (n < grid.size() && grid[n] <= cut) ++n;
    return std::max<std::size_t>(n, 2);
}

GridFunction make_constant_grid(const GridSpec& spec, double a) {
    if (!(spec.x_lo > 0.0) || !(spec.x_hi > spec.x_lo))
        throw config_error("grid spec: need 0 < x_lo < x_hi");
    if (spec.n < 16) throw config_error("grid spec: need at least 16 points");
    if (!(a >= 0.0)) throw config_error("grid spec: seed must be >= 0");
    GridFunction g;
    g.grid.resize(spec.n);
    const double r = std::log(spec.x_hi / spec.x_lo);
    for (int i = 0; i < spec.n; ++i)
        g.grid[i] = spec.x_lo * std::exp(r * i / (spec.n - 1.0));
    g.grid.back() = spec.x_hi;
    g.values.assign(spec.n, a);
    return g;
}

double grid_integral(const GridFunction& g) {
    double s = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i)
        s += 0.5 * (g.grid[i] - g.grid[i - 1]) * (g.values[i] + g.values[i - 1]);
    return s;
}

double grid_moment(const GridFunction& g, double order) {
    double s = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i)
        s += 0.5 * (g.grid[i] - g.grid[i - 1]) *
             (std::pow(g.grid[i], order) * g.values[i] +
              std::pow(g.grid[i - 1], order) * g.values[i - 1]);
    return s;
}

namespace {

// v beyond which the remaining mass of a finite measure is negligible
double finite_mass_horizon(const LevyModel& model, double mass) {
    const double thr = 1e-16 * mass;
    double hi = 1.0;
    int guard = 0;
    while (model.pi_tail(hi) > thr) {
        hi *= 2.0;
        if (++guard > 100)
            throw numeric_error(
                "theta_apply: Levy tail never drops below threshold", hi);
    }
    double lo = 0.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (model.pi_tail(mid) > thr ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

GridFunction theta_apply(const GridFunction& g, const LevyModel& model) {
    g.validate();
    const bool all_zero =
        std::all_of(g.values.begin(), g.values.end(),
                    [](double v) { return v == 0.0; });
    if (all_zero) return like(g);

    const TrapezoidIntegrator inner(g);

    // exp(-inner integral) is dead once int_x^{xe^v} g exceeds ln(1e16); the
    // grid must reach the 1e-12 horizon of the left edge, the last stretch
    // to the kill point may fall back on the right extrapolation
    const double x0 = g.grid.front();
    const double x_need = inner.reach(x0, kHorizonLog);
    if (!(g.grid.back() >= x_need * (1.0 - 1e-12)))
        throw config_error(
            "theta_apply: grid too short for the jump horizon: need "
            "x_max >= " +
            fmt(x_need) + ", have " + fmt(g.grid.back()));

    const double mass = model.total_mass();
    const double v_fin =
        std::isfinite(mass) ? finite_mass_horizon(model, mass) : 0.0;
    // per-cell tolerance: g is piecewise linear, so the integrand is smooth
    // inside a grid cell and a global adaptive pass would chase every kink
    quad::Options cell_opt;
    cell_opt.rel_tol = 1e-9;
    cell_opt.abs_tol = 1e-15;
    cell_opt.max_intervals = 500;
    GridFunction out = like(g);
    const std::size_t n = g.size();
    parallel_for(n, [&](std::size_t i) {
        const double x = g.grid[i];
        double y_end = inner.reach(x, kKillLog);
        if (!std::isfinite(y_end)) {
            if (std::isfinite(mass)) {
                y_end = x * std::exp(v_fin);
            } else {
                throw numeric_error(
                    "theta_apply: inner integral never reaches the kill "
                    "threshold at x = " +
                        fmt(x),
                    x);
            }
        }
        // Theta(g)(x) = int_0^vmax e^{-J} g(xe^v) xe^v pibar(v) dv
        //             + e^{-J(vmax)} pibar(vmax),  J = int_x^{xe^v} g;
        // kept in v so pibar's possible singularity sits at v = 0, where
        // bisection can refine to arbitrarily small widths
        const double v_max = std::log(y_end / x);
        auto f = [&](double v) {
            const double y = x * std::exp(v);
            const double j = inner.between(x, y);
            if (j > 700.0) return 0.0;
            return std::exp(-j) * g.value_at(y) * y * model.pi_tail(v);
        };
        double total = 0.0;
        double a = 0.0;
        for (std::size_t j = i + 1; j <= n && a < v_max; ++j) {
            const double b =
                (j < n && g.grid[j] < y_end) ? std::log(g.grid[j] / x) : v_max;
            if (b <= a) continue;
            auto res = quad::integrate(f, a, b, cell_opt);
            if (!res.converged)
                throw numeric_error(
                    "theta_apply: outer quadrature failed at x = " + fmt(x),
                    res.error);
            total += res.value;
            a = b;
        }
        const double jmax = inner.between(x, y_end);
        out.values[i] = total + (jmax > 700.0
                                     ? 0.0
                                     : std::exp(-jmax) * model.pi_tail(v_max));
    });
    return out;
}

GridFunction theta_phi_apply(const GridFunction& g, const LevyModel& model) {
    g.validate();
    GridFunction out = g;
    for (std::size_t i = 0; i < g.size(); ++i)
        out.values[i] = model.phi(g.grid[i] * g.values[i]);
    return out;
}

GridFunction iterate_to_fprime(const LevyModel& model, const GridSpec& spec,
                               double a0, double tol, int max_iter) {
    if (!(a0 > 0.0)) throw config_error("iterate_to_fprime: seed must be > 0");
    const double mass = model.total_mass();
    if (std::isfinite(mass) && !(a0 < mass))
        throw config_error(
            "iterate_to_fprime: seed must lie in (0, pi(0,inf)) = (0, " +
            fmt(mass) + ")");
    if (!(tol > 0.0)) throw config_error("iterate_to_fprime: tol must be > 0");
    if (max_iter < 1)
        throw config_error("iterate_to_fprime: need max_iter >= 1");

    // envelope exponent kappa/(1 - kappa) with kappa strictly above the
    // large-x ratio x phi'/phi, as the growth bound requires
    std::vector<double> probe(64);
    for (std::size_t i = 0; i < probe.size(); ++i)
        probe[i] = std::pow(10.0, 8.0 * static_cast<double>(i) / 63.0);
    const auto diag = check_H(model, probe);
    if (!(diag.max_ratio < 1.0))
        throw unsupported_regime_error(
            "iterate_to_fprime: x phi'/phi reaches " + fmt(diag.max_ratio) +
            "; the iteration requires limsup < 1");
    const double kappa = diag.at_largest + 0.25 * (1.0 - diag.at_largest);

    GridFunction g = make_constant_grid(spec, a0);
    g.right_exponent = kappa / (1.0 - kappa);
    g.kappa_hat = kappa;
    g.model_hash = model_hash(model);

    const std::size_t trusted = g.trusted_size();
    bool converged = false;
    int n = 0;
    double residual = std::numeric_limits<double>::infinity();
    while (n < max_iter) {
        GridFunction next = theta_apply(g, model);
        ++n;
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < trusted; ++i) {
            diff = std::max(diff, std::abs(next.values[i] - g.values[i]));
            scale = std::max(scale, std::abs(next.values[i]));
        }
        residual = (scale > 0.0) ? diff / scale
                                 : (diff > 0.0 ? std::numeric_limits<
                                                     double>::infinity()
                                               : 0.0);
        g.values = std::move(next.values);
        if (residual <= tol) {
            converged = true;
            break;
        }
    }
    g.iterations = n;
    g.residual = residual;
    g.converged = converged;
    return g;
}

GridFunction density_from_fprime(const GridFunction& fp) {
    fp.validate();
    if (!fp.converged)
        throw config_error(
            "density_from_fprime: iterate is flagged non-converged");
    GridFunction k = fp;
    // F by cumulative trapezoid from the left edge; the missing piece of the
    // primitive below x0 only rescales k and is absorbed by normalization
    std::vector<double> F(fp.size());
    F[0] = 0.0;
    for (std::size_t i = 1; i < fp.size(); ++i)
        F[i] = F[i - 1] + 0.5 * (fp.grid[i] - fp.grid[i - 1]) *
                              (fp.values[i] + fp.values[i - 1]);
    for (std::size_t i = 0; i < fp.size(); ++i)
        k.values[i] = fp.values[i] * std::exp(-F[i]);
    const double z = grid_integral(k);
    if (!(z > 0.0))
        throw numeric_error("density_from_fprime: density mass vanished", z);
    if (z < 0.9 || z > 1.1)
        std::cerr << "warning: density normalization " << z
                  << " outside [0.9, 1.1]; grid coverage is suspect\n";
    for (double& v : k.values) v /= z;
    k.normalization = z;
    k.right_exponent = std::numeric_limits<double>::quiet_NaN();
    return k;
}

double verify_integral_equation(const GridFunction& k, const LevyModel& model) {
    k.validate();
    const std::size_t trusted = k.trusted_size();
    const std::size_t n = k.size();
    // k is piecewise linear, so integrate cell by cell; a single adaptive pass
    // over [x, x_hi] would have to chase every interpolation kink.
    quad::Options cell_opt;
    cell_opt.rel_tol = 1e-9;
    cell_opt.abs_tol = 1e-15;
    cell_opt.max_intervals = 300;
    std::vector<double> rel(trusted, 0.0);
    parallel_for(trusted, [&](std::size_t i) {
        const double x = k.grid[i];
        auto f = [&](double y) {
            return model.pi_tail(std::log(y / x)) * k.value_at(y);
        };
        double total = 0.0;
        for (std::size_t j = i; j + 1 < n; ++j) {
            auto res = quad::integrate(f, k.grid[j], k.grid[j + 1], cell_opt);
            if (!res.converged)
                throw numeric_error(
                    "verify_integral_equation: quadrature failed at x = " + fmt(x),
                    res.error);
            total += res.value;
        }
        const double ki = k.values[i];
        if (ki == 0.0 && total == 0.0)
            rel[i] = 0.0;
        else
            rel[i] = std::abs(ki - total) / ki;
    });
    return *std::max_element(rel.begin(), rel.end());
}

void write_grid_csv(const GridFunction& g, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(g.model_hash));
    out << "# model_hash: " << buf << "\n";
    out << "# iterations: " << g.iterations << "\n";
    out << "# residual: " << fmt(g.residual) << "\n";
    out << "# converged: " << (g.converged ? 1 : 0) << "\n";
    out << "# kappa_hat: " << fmt(g.kappa_hat) << "\n";
    out << "# right_exponent: " << fmt(g.right_exponent) << "\n";
    out << "# normalization: " << fmt(g.normalization) << "\n";
    out << "x,value\n";
    for (std::size_t i = 0; i < g.size(); ++i)
        out << fmt(g.grid[i]) << "," << fmt(g.values[i]) << "\n";
}

void write_grid_csv(const GridFunction& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    write_grid_csv(g, out);
}

GridFunction read_grid_csv(std::istream& in) {
    GridFunction g;
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = line.substr(2, colon - 2);
            const std::string val = line.substr(colon + 1);
            try {
                if (key == "model_hash")
                    g.model_hash = std::stoull(val, nullptr, 16);
                else if (key == "iterations")
                    g.iterations = std::stoi(val);
                else if (key == "residual")
                    g.residual = std::stod(val);
                else if (key == "converged")
                    g.converged = std::stoi(val) != 0;
                else if (key == "kappa_hat")
                    g.kappa_hat = std::stod(val);
                else if (key == "right_exponent")
                    g.right_exponent = std::stod(val);
                else if (key == "normalization")
                    g.normalization = std::stod(val);
            } catch (const std::exception&) {
                throw config_error("grid csv: bad metadata line: " + line);
            }
            continue;
        }
        if (!saw_header) {
            if (line.rfind("x,", 0) != 0)
                throw config_error("grid csv: missing x,value header");
            saw_header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw config_error("grid csv: malformed row: " + line);
        try {
            g.grid.push_back(std::stod(line.substr(0, comma)));
            g.values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw config_error("grid csv: malformed row: " + line);
        }
    }
    g.validate();
    return g;
}

GridFunction read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open: " + path);
    return read_grid_csv(in);
}

}  // namespace subexp
