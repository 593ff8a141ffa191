#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// Subordinator models: Laplace exponent phi(x) = int_0^inf (1-e^{-xv}) pi(dv),
// the Levy tail pibar(u) = pi(u, inf), and derived quantities.  Models are
// immutable; every operation is a pure function safe for concurrent use.

namespace subexp {

struct HDiagnostic {
    double max_ratio;   // max over the grid of x phi'(x)/phi(x)
    double at_largest;  // value at the largest grid point (limsup estimate)
};

struct MomentEntry {
    int n;
    double log_value;  // ln E[I^n]
    double value;      // exp(log_value); +inf once past representable range
};

// one term c * u^{gamma} of a small-u expansion of the Levy tail
struct ExpansionTerm {
    double coeff;
    double exponent;
};

class LevyModel {
  public:
    virtual ~LevyModel() = default;
    virtual const std::string& variant() const = 0;
    virtual double phi(double x) const = 0;
    virtual double phi_derivative(double x, int order) const = 0;
    virtual double pi_tail(double u) const = 0;
    // |pi|; +inf for infinite activity
    virtual double total_mass() const = 0;
    // int_0^inf v pi(dv) = phi'(0+); +inf allowed
    virtual double mean_jump() const = 0;
    // x_psi = lim_{x->0} x/phi(x) = 1/mean_jump, 0 when the mean is infinite
    double x_psi() const;
    // small-u tail expansion terms when the model carries them
    virtual std::optional<std::vector<ExpansionTerm>> lower_expansion() const {
        return std::nullopt;
    }
    // Levy density at v, when the variant has one in closed form
    virtual bool has_density() const { return false; }
    virtual double pi_density(double v) const;
    // canonical JSON of the parameter object (used for hashing/metadata)
    virtual std::string params_json() const = 0;
};

using ModelPtr = std::shared_ptr<const LevyModel>;

ModelPtr make_stable(double alpha);
ModelPtr make_gamma_sub();
ModelPtr make_abc(double a, double b, double c);
// pi(du) = e^{-u} du
ModelPtr make_compound_poisson_exponential();
// general finite-activity model given its tail function
ModelPtr make_compound_poisson(
    std::function<double(double)> tail_fn, double total_mass,
    std::optional<std::vector<ExpansionTerm>> lower_expansion = std::nullopt);
// pibar(u) = sum c_i u^{-gamma_i} on (0,1], C^1 monotone cutoff on (1,2)
ModelPtr make_infinite_power_tail(std::vector<ExpansionTerm> coeffs,
                                  double remainder_order);
ModelPtr make_beta_coalescent(double alpha, double beta);
ModelPtr make_barrier_walk(double c);

HDiagnostic check_H(const LevyModel& model, const std::vector<double>& x_grid);

// E[I^n] = n! / prod_{i<=n} phi(i), n = 1..n_max, computed in log scale
std::vector<MomentEntry> exact_moments(const LevyModel& model, int n_max);

// cross-checks straight from the defining integrals
double phi_by_quadrature(const LevyModel& model, double x);
double phi_derivative_by_quadrature(const LevyModel& model, double x,
                                    int order);
// phi(x) = x int_0^inf e^{-xu} pibar(u) du
double phi_from_tail_quadrature(const LevyModel& model, double x);

// JSON model files: {"variant": str, "params": obj, "expansion": [[c,g],...]}
ModelPtr model_from_json(const std::string& text);
ModelPtr model_from_file(const std::string& path);
std::string model_to_json(const LevyModel& model);
// FNV-1a hash of the canonical JSON, for embedding in output metadata
std::uint64_t model_hash(const LevyModel& model);

}  // namespace subexp
