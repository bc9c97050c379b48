#pragma once

#include <cstddef>
#include <vector>

namespace pslab::stats {

double std_normal_pdf(double x);

// Complementary-error-function based; absolute error below 1e-12.
double std_normal_cdf(double x);

// Rational approximation (Acklam) refined by one Newton step against the
// cdf above. Throws std::invalid_argument for p outside (0, 1).
double std_normal_quantile(double p);

// Antiderivative of the standard normal CDF: d/dx [x*Phi(x) + phi(x)] = Phi(x).
double std_normal_cdf_antiderivative(double x);

// Exact L1 distance between the empirical CDF of `sample` and the standard
// Gaussian CDF. The integral is assembled in closed form on each interval
// between consecutive order statistics, splitting at the quantile where the
// plateau level crosses Phi; tails are handled analytically.
// Rejects empty samples and non-finite entries.
double wasserstein1_to_std_gaussian(const std::vector<double>& sample);

// Leave-one-out jackknife standard error of the statistic above.
double wasserstein1_jackknife_se(const std::vector<double>& sample);

struct MomentEstimate {
    double value = 0.0;
    double se = 0.0;
};

// Plug-in raw moment of order k (2..4) with jackknife standard error.
MomentEstimate moments_with_se(const std::vector<double>& sample, int k);

MomentEstimate sample_mean_with_se(const std::vector<double>& sample);

// Sample variance (unbiased) with a standard error valid without
// distributional assumptions (uses the central fourth moment).
MomentEstimate sample_variance_with_se(const std::vector<double>& sample);

struct RatePoint {
    double r = 0.0;
    double value = 0.0;
    double se = 0.0;  // standard error of `value`; 0 means equal weights
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_ci_halfwidth = 0.0;  // 95%
    std::size_t n_points = 0;
};

// Weighted least squares of log(value) on log(r); weights follow from the
// SEs by the delta method. Needs at least 3 points, all r and values > 0.
RateFit loglog_rate_fit(const std::vector<RatePoint>& points);

// Regularized lower incomplete gamma P(a, x): series for small x, Lentz
// continued fraction otherwise.
double regularized_lower_gamma(double a, double x);

// P[chi_D <= y] for the norm of a D-dimensional standard Gaussian vector.
double chi_smallball_cdf(int dof, double y);

}  // namespace pslab::stats
