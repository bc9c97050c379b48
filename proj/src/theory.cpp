#include "pslab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pslab::theory {

namespace {

double fbm_kernel(double hurst, double s, double t) {
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::fabs(t - s), h2));
}

}  // namespace

double fbm_conditional_variance(double hurst, double s1, double s2, double s3) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("fbm_conditional_variance: hurst must lie in (0, 1)");
    if (!(s1 >= 0.0 && s2 >= 0.0))
        throw std::invalid_argument("fbm_conditional_variance: conditioning times must be >= 0");
    if (!(s3 > s1 && s3 > s2))
        throw std::invalid_argument("fbm_conditional_variance: s3 must exceed s1 and s2");

    // Conditioning on B_0 carries no information; collapse duplicates.
    std::vector<double> cond;
    if (s1 > 0.0) cond.push_back(s1);
    if (s2 > 0.0 && s2 != s1) cond.push_back(s2);

    const double var3 = fbm_kernel(hurst, s3, s3);
    if (cond.empty()) return var3;

    if (cond.size() == 1) {
        const double c11 = fbm_kernel(hurst, cond[0], cond[0]);
        const double c13 = fbm_kernel(hurst, cond[0], s3);
        const double reg = 1e-12 * c11;
        const double denom = c11 + reg;
        if (!(denom > 0.0))
            throw std::runtime_error("fbm_conditional_variance: singular conditioning block");
        return var3 - c13 * c13 / denom;
    }

    const double a = fbm_kernel(hurst, cond[0], cond[0]);
    const double b = fbm_kernel(hurst, cond[0], cond[1]);
    const double c = fbm_kernel(hurst, cond[1], cond[1]);
    const double p = fbm_kernel(hurst, cond[0], s3);
    const double q = fbm_kernel(hurst, cond[1], s3);

    const double reg = 1e-12 * (a + c);
    const double a_r = a + reg;
    const double c_r = c + reg;
    const double det = a_r * c_r - b * b;
    if (!(det > 0.0))
        throw std::runtime_error("fbm_conditional_variance: singular conditioning block");
    // Schur complement: var3 - [p q] Sigma^{-1} [p q]^T.
    const double quad = (c_r * p * p - 2.0 * b * p * q + a_r * q * q) / det;
    return var3 - quad;
}

bool ConditionHReport::exponent_matches(double beta, double tol) const {
    return std::fabs(peak_log_slope + beta * static_cast<double>(md)) <=
           tol * static_cast<double>(md);
}

ConditionHReport check_condition_H_fbm(double hurst, int md, const ConditionHGrid& grid) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("check_condition_H_fbm: hurst must lie in (0, 1)");
    if (md < 1) throw std::invalid_argument("check_condition_H_fbm: md must be >= 1");
    if (grid.n_delta < 2 || grid.n_inner < 1)
        throw std::invalid_argument("check_condition_H_fbm: grid too small");

    ConditionHReport report;
    report.hurst = hurst;
    report.md = md;
    report.grid = grid;

    const double two_pi = 6.283185307179586477;
    const double s3 = 1.0;
    const double log_step = std::log(grid.delta_max / grid.delta_min) /
                            static_cast<double>(grid.n_delta - 1);

    double max_ratio = 0.0;
    double min_slnd = std::numeric_limits<double>::infinity();
    std::vector<double> log_delta, log_peak;
    log_delta.reserve(grid.n_delta);
    log_peak.reserve(grid.n_delta);

    for (std::size_t k = 0; k < grid.n_delta; ++k) {
        const double delta = grid.delta_min * std::exp(log_step * static_cast<double>(k));
        const double s2 = s3 - delta;
        // Worst peak over the placements of the earlier conditioner.
        double peak = 0.0;
        double v_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < grid.n_inner; ++j) {
            const double frac = static_cast<double>(j + 1) / static_cast<double>(grid.n_inner);
            const double s1 = s2 * frac;  // includes the duplicate s1 == s2 endpoint
            const double v = fbm_conditional_variance(hurst, s1, s2, s3);
            v_min = std::min(v_min, v);
            peak = std::max(peak, std::pow(two_pi * v, -0.5 * static_cast<double>(md)));
        }
        max_ratio = std::max(max_ratio, peak * std::pow(delta, hurst * static_cast<double>(md)));
        min_slnd = std::min(min_slnd, v_min / std::pow(delta, 2.0 * hurst));
        log_delta.push_back(std::log(delta));
        log_peak.push_back(std::log(peak));
    }

    report.max_ratio = max_ratio;
    report.fitted_kappa = max_ratio;
    report.min_slnd_ratio = min_slnd;

    // Small-gap exponent of the density peak from an unweighted log-log fit.
    std::vector<stats::RatePoint> pts;
    for (std::size_t k = 0; k < log_delta.size(); ++k)
        pts.push_back({std::exp(log_delta[k]), std::exp(log_peak[k]), 0.0});
    report.peak_log_slope = stats::loglog_rate_fit(pts).slope;

    report.pass = std::isfinite(max_ratio) && max_ratio > 0.0 && min_slnd > 0.0 &&
                  report.exponent_matches(hurst);
    return report;
}

double variance_scaling_exponent(const DynamicsSpec& spec) {
    switch (spec.family) {
        case Family::Frozen:
            return 2.0;
        case Family::Brownian:
        case Family::EllipticDiffusion:
            if (spec.ambient_dim != 1) break;
            return 1.5;  // 2 - d/2 at d = 1
        case Family::Stable:
            if (spec.ambient_dim != 1) break;
            return 2.0 - 1.0 / spec.alpha;
        case Family::Fbm:
            if (spec.ambient_dim != 1) break;
            return 2.0 - 0.5 * spec.hurst;  // 2(1-H) + 3H/2 at d = 1
        case Family::Dyson:
            break;
    }
    throw std::invalid_argument("variance_scaling_exponent: no reference exponent for this family");
}

ScalingReport variance_scaling_check(const ScalingRun& run, const std::vector<double>& r_list,
                                     RngStream& rng, double tolerance, int workers) {
    if (r_list.size() < 3)
        throw std::invalid_argument("variance_scaling_check: need at least 3 horizons");
    if (r_list.back() / r_list.front() < 100.0 * (1.0 - 1e-12))
        throw std::invalid_argument("variance_scaling_check: horizons must span >= 2 decades");

    ScalingReport report;
    report.family = run.dynamics.family;
    report.d = run.dynamics.ambient_dim;
    report.exponent_theory = variance_scaling_exponent(run.dynamics);
    report.tolerance = tolerance;

    std::vector<stats::RatePoint> pts;
    for (std::size_t i = 0; i < r_list.size(); ++i) {
        const double r = r_list[i];
        SystemConfig config{run.dynamics, run.psi, run.nu, r, run.dt.make_grid(r),
                            run.k_safety, run.n_mc};
        RngStream stream = rng.child(1000 + i);
        const MomentReport mecke = mecke_moment_estimators(config, run.n_mc, stream, workers);
        report.points.push_back({r, mecke.sigma2, mecke.sigma2_se});
        pts.push_back({r, mecke.sigma2, mecke.sigma2_se});
    }

    report.exponent_fitted = stats::loglog_rate_fit(pts);
    report.pass = std::fabs(report.exponent_fitted.slope - report.exponent_theory) <= tolerance;
    return report;
}

double stable_cf_check(double alpha, double t, const std::vector<double>& theta_list,
                       std::size_t n_mc, RngStream& rng) {
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::invalid_argument("stable_cf_check: alpha must lie in (0, 2]");
    if (theta_list.empty()) return 0.0;

    std::vector<double> cos_sums(theta_list.size(), 0.0);
    const double scale = std::pow(t, 1.0 / alpha);
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double x = scale * sample_stable_unit(alpha, rng);
        for (std::size_t j = 0; j < theta_list.size(); ++j)
            cos_sums[j] += std::cos(theta_list[j] * x);
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < theta_list.size(); ++j) {
        const double empirical = cos_sums[j] / static_cast<double>(n_mc);
        const double exact = std::exp(-t * std::pow(std::fabs(theta_list[j]), alpha));
        worst = std::max(worst, std::fabs(empirical - exact));
    }
    return worst;
}

}  // namespace pslab::theory
