#pragma once

#include <cstddef>
#include <vector>

#include "pslab/functionals.hpp"
#include "pslab/rng.hpp"
#include "pslab/stats.hpp"

namespace pslab::theory {

// Var(B_{s3} | B_{s1}, B_{s2}) for fractional Brownian motion with the given
// Hurst index, through the Schur complement of the 3x3 covariance. Zero-time
// conditioners are dropped (B_0 = 0 a.s.), duplicated conditioners collapse
// to a single variable.
double fbm_conditional_variance(double hurst, double s1, double s2, double s3);

struct ConditionHGrid {
    double delta_min = 1e-3;
    double delta_max = 1.0;
    std::size_t n_delta = 49;  // geometric spacing in the gap
    std::size_t n_inner = 8;   // placements of the earlier conditioner
};

struct ConditionHReport {
    double hurst = 0.0;
    int md = 1;  // total dimension of one particle vector
    ConditionHGrid grid;
    double max_ratio = 0.0;       // sup over the grid of peak * Delta^{hurst * md}
    double fitted_kappa = 0.0;    // the sup above; finite iff the bound holds
    double min_slnd_ratio = 0.0;  // min over the grid of v / Delta^{2 hurst}
    double peak_log_slope = 0.0;  // slope of log(peak) against log(Delta)
    bool pass = false;

    // Does the measured small-gap exponent agree with peak ~ Delta^{-beta*md}?
    bool exponent_matches(double beta, double tol = 0.05) const;
};

// Verifies that the conditional density peak (2 pi v)^{-md/2} stays bounded
// by kappa * Delta^{-hurst*md} over a geometric small-gap grid, and measures
// the actual exponent so wrong-beta hypotheses are rejected.
ConditionHReport check_condition_H_fbm(double hurst, int md,
                                       const ConditionHGrid& grid = ConditionHGrid{});

// Scenario pieces shared by every horizon in a scaling sweep.
struct ScalingRun {
    DynamicsSpec dynamics;
    TestFunction psi;
    NuSpec nu;
    DtPolicy dt;
    double k_safety = 6.0;
    std::size_t n_mc = 20000;
};

struct ScalingPoint {
    double r = 0.0;
    double sigma2 = 0.0;
    double sigma2_se = 0.0;
};

struct ScalingReport {
    Family family = Family::Brownian;
    int d = 1;
    double exponent_theory = 0.0;
    stats::RateFit exponent_fitted;
    double tolerance = 0.1;
    bool pass = false;
    std::vector<ScalingPoint> points;
};

// Growth exponent of sigma_r^2 predicted for the family at ambient
// dimension 1 (the regimes exercised here).
double variance_scaling_exponent(const DynamicsSpec& spec);

ScalingReport variance_scaling_check(const ScalingRun& run, const std::vector<double>& r_list,
                                     RngStream& rng, double tolerance = 0.1, int workers = 1);

// max over theta of |E_hat[cos(theta X_t)] - exp(-t |theta|^alpha)|.
double stable_cf_check(double alpha, double t, const std::vector<double>& theta_list,
                       std::size_t n_mc, RngStream& rng);

}  // namespace pslab::theory
