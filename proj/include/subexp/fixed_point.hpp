#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "subexp/levy_model.hpp"

namespace subexp {

struct GridSpec {
    double x_lo;
    double x_hi;
    int n = 512;
};

// Non-negative function sampled on a geometric grid.  Evaluation below the
// grid is constant, above it a power law anchored at the last node; the
// exponent is fitted from the last two nodes unless right_exponent is set
// (the fixed-point iteration pins it to the kappa/(1-kappa) envelope).
struct GridFunction {
    std::vector<double> grid;
    std::vector<double> values;
    double right_exponent = std::numeric_limits<double>::quiet_NaN();

    std::uint64_t model_hash = 0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
    double kappa_hat = std::numeric_limits<double>::quiet_NaN();
    double normalization = 1.0;

    std::size_t size() const { return grid.size(); }
    void validate() const;
    double value_at(double x) const;
    // number of leading grid points unaffected by right-edge extrapolation
    // (the top decade is excluded)
    std::size_t trusted_size() const;
};

GridFunction make_constant_grid(const GridSpec& spec, double a);

// trapezoid of values (or x^order * values) over the grid
double grid_integral(const GridFunction& g);
double grid_moment(const GridFunction& g, double order);

GridFunction theta_apply(const GridFunction& g, const LevyModel& model);
GridFunction theta_phi_apply(const GridFunction& g, const LevyModel& model);

GridFunction iterate_to_fprime(const LevyModel& model, const GridSpec& spec,
                               double a0, double tol = 1e-6,
                               int max_iter = 200);

GridFunction density_from_fprime(const GridFunction& fp);

double verify_integral_equation(const GridFunction& k, const LevyModel& model);

void write_grid_csv(const GridFunction& g, std::ostream& out);
void write_grid_csv(const GridFunction& g, const std::string& path);
GridFunction read_grid_csv(std::istream& in);
GridFunction read_grid_csv(const std::string& path);

}  // namespace subexp
