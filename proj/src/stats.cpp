#include "pslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pslab::stats {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kSqrt2 = 1.4142135623730950488;

// Student-t 97.5% quantiles for small degrees of freedom; beyond the table
// the normal value is close enough for CI purposes here.
double t_quantile_975(std::size_t df) {
    static const double table[] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df == 0) return std::numeric_limits<double>::infinity();
    if (df <= 30) return table[df - 1];
    return 1.959964;
}

}  // namespace

double std_normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("std_normal_quantile: p must lie in (0,1)");

    // Acklam's rational approximation, |relative error| < 1.15e-9.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    const double p_high = 1.0 - p_low;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= p_high) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double density = std_normal_pdf(x);
    if (density > 1e-300) x -= (std_normal_cdf(x) - p) / density;
    return x;
}

double std_normal_cdf_antiderivative(double x) {
    return x * std_normal_cdf(x) + std_normal_pdf(x);
}

namespace {

// Integral over [a, b] of |level - Phi(x)| for a plateau level in [0, 1].
double plateau_band_integral(double a, double b, double level) {
    if (b <= a) return 0.0;
    const auto segment = [](double lo, double hi, double lvl, bool phi_above) {
        const double raw = (std_normal_cdf_antiderivative(hi) - std_normal_cdf_antiderivative(lo)) -
                           lvl * (hi - lo);
        return phi_above ? raw : -raw;
    };
    if (level <= 0.0) return segment(a, b, level, true);
    if (level >= 1.0) return segment(a, b, level, false);
    const double crossing = std_normal_quantile(level);
    if (crossing <= a) return segment(a, b, level, true);
    if (crossing >= b) return segment(a, b, level, false);
    return segment(a, crossing, level, false) + segment(crossing, b, level, true);
}

double wasserstein1_sorted(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    const double n_inv = 1.0 / static_cast<double>(n);

    // Left tail: F_n = 0 below the smallest order statistic.
    double total = std_normal_cdf_antiderivative(sorted.front());
    // Right tail: F_n = 1 above the largest; by symmetry of Phi the integral
    // of 1 - Phi over [x, inf) equals the antiderivative at -x.
    total += std_normal_cdf_antiderivative(-sorted.back());

    for (std::size_t i = 0; i + 1 < n; ++i)
        total += plateau_band_integral(sorted[i], sorted[i + 1],
                                       static_cast<double>(i + 1) * n_inv);
    return total;
}

}  // namespace

double wasserstein1_to_std_gaussian(const std::vector<double>& sample) {
    if (sample.empty())
        throw std::invalid_argument("wasserstein1_to_std_gaussian: empty sample");
    for (double x : sample)
        if (!std::isfinite(x))
            throw std::invalid_argument("wasserstein1_to_std_gaussian: non-finite entry");
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    return wasserstein1_sorted(sorted);
}

double wasserstein1_jackknife_se(const std::vector<double>& sample) {
    const std::size_t n = sample.size();
    if (n < 2) return 0.0;
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> loo(n - 1);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loo.assign(sorted.begin(), sorted.end() - 1);
        std::copy(sorted.begin() + static_cast<std::ptrdiff_t>(i) + 1, sorted.end(),
                  loo.begin() + static_cast<std::ptrdiff_t>(i));
        const double v = wasserstein1_sorted(loo);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double ss = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    return std::sqrt(static_cast<double>(n - 1) * ss);
}

MomentEstimate moments_with_se(const std::vector<double>& sample, int k) {
    if (k < 2 || k > 4) throw std::invalid_argument("moments_with_se: k must be 2..4");
    if (sample.size() < 2)
        throw std::invalid_argument("moments_with_se: need at least 2 observations");
    const std::size_t n = sample.size();

    double sum = 0.0;
    std::vector<double> powers(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = sample[i];
        for (int j = 1; j < k; ++j) p *= sample[i];
        powers[i] = p;
        sum += p;
    }
    const double value = sum / static_cast<double>(n);

    // Jackknife over leave-one-out means.
    double jk_sum = 0.0, jk_sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m_i = (sum - powers[i]) / static_cast<double>(n - 1);
        jk_sum += m_i;
        jk_sum_sq += m_i * m_i;
    }
    const double jk_mean = jk_sum / static_cast<double>(n);
    const double ss = std::max(0.0, jk_sum_sq / static_cast<double>(n) - jk_mean * jk_mean);
    return {value, std::sqrt(static_cast<double>(n - 1) * ss)};
}

MomentEstimate sample_mean_with_se(const std::vector<double>& sample) {
    if (sample.empty()) throw std::invalid_argument("sample_mean_with_se: empty sample");
    const std::size_t n = sample.size();
    double sum = 0.0;
    for (double x : sample) sum += x;
    const double mean = sum / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : sample) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

MomentEstimate sample_variance_with_se(const std::vector<double>& sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw std::invalid_argument("sample_variance_with_se: need >= 2 observations");
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m4 = 0.0;
    for (double x : sample) {
        const double d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    const double var = m2 * static_cast<double>(n) / static_cast<double>(n - 1);
    const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(n));
    return {var, se};
}

RateFit loglog_rate_fit(const std::vector<RatePoint>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("loglog_rate_fit: need at least 3 points");
    for (const auto& p : points)
        if (!(p.r > 0.0) || !(p.value > 0.0))
            throw std::invalid_argument("loglog_rate_fit: r and value must be positive");

    const std::size_t n = points.size();
    bool weighted = true;
    for (const auto& p : points)
        if (!(p.se > 0.0)) weighted = false;

    std::vector<double> x(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(points[i].r);
        y[i] = std::log(points[i].value);
        if (weighted) {
            const double se_log = points[i].se / points[i].value;  // delta method
            w[i] = 1.0 / (se_log * se_log);
        } else {
            w[i] = 1.0;
        }
    }

    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("loglog_rate_fit: degenerate abscissae");

    RateFit fit;
    fit.n_points = n;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += w[i] * resid * resid;
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;

    // Slope variance from the declared weights, inflated by the reduced
    // chi-square when the scatter exceeds the declared errors.
    const std::size_t df = n - 2;
    double var_slope = 1.0 / sxx;
    if (df > 0) {
        const double chi2_red = ss_res / static_cast<double>(df);
        if (weighted)
            var_slope *= std::max(1.0, chi2_red);
        else
            var_slope *= chi2_red;
    }
    fit.slope_ci_halfwidth = t_quantile_975(df) * std::sqrt(var_slope);
    return fit;
}

namespace {

double log_gamma(double a) { return std::lgamma(a); }

double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

double upper_gamma_cf(double a, double x) {
    // Modified Lentz continued fraction for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace

double regularized_lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("regularized_lower_gamma: a must be positive");
    if (x < 0.0) throw std::invalid_argument("regularized_lower_gamma: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_cf(a, x);
}

double chi_smallball_cdf(int dof, double y) {
    if (dof < 1) throw std::invalid_argument("chi_smallball_cdf: dof must be >= 1");
    if (y < 0.0) throw std::invalid_argument("chi_smallball_cdf: y must be nonnegative");
    return regularized_lower_gamma(0.5 * static_cast<double>(dof), 0.5 * y * y);
}

}  // namespace pslab::stats
