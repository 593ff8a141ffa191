#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "subexp/levy_model.hpp"
#include "subexp/psi.hpp"

namespace subexp {

struct MomentEstimate {
    int order = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct TailEstimate {
    double t = 0.0;
    double p_hat = 0.0;
    // half-width of a 99% Wilson score interval for P(I > t)
    double half_width = 0.0;
};

enum class SchemeKind { affine_recursion, compensated_path, exact_special };

// eps is the small-jump cutoff for the compensated path and must be 0 for the
// other schemes; horizon_tail_bound is the e^{-xi} level below which the
// remaining integral is dropped.
struct SimScheme {
    SchemeKind kind = SchemeKind::affine_recursion;
    double eps = 0.0;
    double horizon_tail_bound = 1e-12;
};

struct SampleSummary {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double truncation_eps = 0.0;
    std::vector<MomentEstimate> moment_estimates;
    std::vector<TailEstimate> tail_estimates;
};

// Cutoff for which the compensated drift loses at most 0.1% of the mean,
// b_eps / phi(1) = 0.001; returns 0 for finite-activity models.
double default_eps(const LevyModel& model);

// Upper bound on the downward relative bias of E[I] at cutoff eps,
// b_eps / phi(1) (the compensated model has phi_eps >= phi).
double truncation_bias_bound(const LevyModel& model, double eps);

// n replicates of I = int_0^inf e^{-xi_r} dr.  Replicate i always uses its own
// RNG stream (seed, i), so results are independent of thread count and raw
// sample order is fixed.  Summaries hold moment orders 1 and 2 with standard
// errors from the same run; tail_estimates is left empty (use tail_estimate on
// the raw samples).  If raw is non-null the samples are stored in replicate
// order.
SampleSummary sample_I(const LevyModel& model, const SimScheme& scheme,
                       std::size_t n, std::uint64_t seed,
                       std::vector<double>* raw = nullptr);

// Which closed-form construction exact_sampler_special uses for the
// two-parameter special family: the Mittag-Leffler route requires a = 1 and
// b = -c, the exponential-power route requires c = 1/(a+1) and b = -a/(a+1).
// automatic picks whichever applies (Mittag-Leffler first).
enum class SpecialBranch { automatic, mittag_leffler, exp_power };

// Exact i.i.d. draws of I for the special family, no path truncation.
std::vector<double> exact_sampler_special(const LevyModel& model, std::size_t n,
                                          std::uint64_t seed,
                                          SpecialBranch branch = SpecialBranch::automatic);

// Empirical exceedance probabilities with 99% Wilson half-widths.
std::vector<TailEstimate> tail_estimate(const std::vector<double>& samples,
                                        const std::vector<double>& t_list);

struct CIFit {
    double c_hat = 0.0;       // estimate of the tail constant c_I
    double std_error = 0.0;   // propagated from the exceedance counts
    double slope = 0.0;       // fitted residual slope of log p + F(t) in t
    double slope_z = 0.0;     // slope / its standard error
    std::size_t exceedances = 0;  // count above the largest window point
};

// Fits log P(I > t) = -F(t) + log(c_hat * psi(t)) over t_window, using the
// joint covariance of the nested exceedance events.
CIFit fit_cI(const PsiEvaluator& psi, const std::vector<double>& samples,
             const std::vector<double>& t_window);

struct SlopeCheck {
    double t_mid = 0.0;
    double slope = 0.0;       // finite difference of -log p_hat
    double target = 0.0;      // psi(t_mid) / t_mid
    double half_width = 0.0;  // 99% half-width for the slope
};

// Local hazard slope of the empirical tail against psi(t)/t at midpoints of
// consecutive t_list pairs.
std::vector<SlopeCheck> tail_slope_check(const PsiEvaluator& psi,
                                         const std::vector<double>& samples,
                                         const std::vector<double>& t_list);

// Number of merge events to go from n_particles blocks to one in the
// Beta(alpha, beta) coalescent, one count per run (embedded jump chain).
std::vector<double> beta_coalescent_collisions(int n_particles, double alpha,
                                               double beta, std::size_t n_runs,
                                               std::uint64_t seed);

// Normalizing factor such that collisions / scaling converges in law to the
// exponential functional of make_beta_coalescent(alpha, beta); the exact
// truncated-moment form (2-alpha) int_{1/n}^1 x^{alpha-3}(1-x)^{beta-1} dx
// of the usual n^{2-alpha}.
double beta_coalescent_scaling(double alpha, double beta, int n_particles);

// Steps until the non-decreasing walk with step tails P(eta >= j) = j^{-c},
// each step conditioned to keep the walk at or below the barrier, reaches the
// barrier exactly; one count per run.
std::vector<double> barrier_walk_absorption(int n_barrier, double c,
                                            std::size_t n_runs,
                                            std::uint64_t seed);

// Normalizing factor n^c / c such that absorption / scaling converges in law
// to the exponential functional of make_barrier_walk(c).
double barrier_walk_scaling(double c, int n_barrier);

// Two-sample Kolmogorov-Smirnov statistic and its 1% critical value.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_critical_1pct(std::size_t n, std::size_t m);

// Raw sample files: 16-byte header (magic "SUBX", format version, count) then
// little-endian IEEE doubles.
void write_samples(const std::vector<double>& samples, const std::string& path);
std::vector<double> read_samples(const std::string& path);

std::string summary_to_json(const SampleSummary& summary);

}  // namespace subexp
