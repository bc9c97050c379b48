#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pslab/scenario.hpp"
#include "pslab/stats.hpp"
#include "pslab/theory.hpp"

namespace pslab {

enum class RunMode { Simulate, Bounds, Rates, Scaling, Audit };

const char* run_mode_name(RunMode mode);
std::optional<RunMode> run_mode_from_name(const std::string& name);

struct RowReport {
    double r = 0.0;

    bool has_moments = false;
    MomentReport moments;

    bool has_dw = false;
    double dw_hat = 0.0, dw_se = 0.0;
    std::vector<double> z;  // retained for the z-sample dump in simulate mode

    bool has_bounds = false;
    BoundReport bounds;

    // Mecke identity: full-system sample variance of A against the
    // single-particle estimator (unit psi scale on both sides).
    bool has_variance_check = false;
    double var_a_unit = 0.0, var_a_unit_se = 0.0;
    double sigma2_unit = 0.0, sigma2_unit_se = 0.0;
    bool pass_variance = false;

    int verdict = -1;  // -1 no verdict, 0 fail, 1 pass
};

struct RateCheck {
    stats::RateFit fit;
    double theory_slope = 0.0;          // reference decay exponent, family dependent
    bool has_calibration = false;       // dw(r) <= C r^slope, C calibrated at the first r
    std::vector<bool> pass_points;      // per r beyond the first
    double dyson_ratio_spread = 0.0;    // max/min of dw * sigma for Dyson
    bool pass = false;
};

struct AuditRecord {
    double r = 0.0;
    double sigma2_base = 0.0, sigma2_base_se = 0.0;
    double sigma2_refined = 0.0, sigma2_refined_se = 0.0;
    double dt_drift_rel = 0.0;
    bool pass_dt = false;
    double sigma2_wide = 0.0, sigma2_wide_se = 0.0;
    double window_shift_ses = 0.0;  // |shift| in combined standard errors
    bool pass_window = false;
};

struct ReportBundle {
    std::string scenario;
    RunMode mode = RunMode::Bounds;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string version;

    std::vector<RowReport> rows;
    std::optional<RateCheck> rate;
    std::optional<theory::ScalingReport> scaling;
    std::vector<AuditRecord> audits;

    bool partial = false;
    std::string error;
    bool all_pass = true;
};

ReportBundle run_scenario(const ScenarioConfig& config, RunMode mode, int workers = 1);

std::vector<AuditRecord> convergence_audit(const ScenarioConfig& config, int workers = 1);

struct OutputPaths {
    std::string csv;
    std::string json;
    std::string gnuplot;
    std::string z_samples;  // simulate mode only
};

OutputPaths write_outputs(const ReportBundle& bundle, const ScenarioConfig& config);

std::string csv_text(const ReportBundle& bundle);
std::string json_text(const ReportBundle& bundle);

// Built-in quick checks over the sampling and estimator layers; prints one
// line per check and returns the number of failures.
int run_selftest(std::ostream& out);

}  // namespace pslab
