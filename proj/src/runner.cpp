#include "pslab/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pslab/parallel.hpp"

namespace pslab {

namespace {

constexpr const char* kVersion = "1.0.0";

const char* mode_names[] = {"simulate", "bounds", "rates", "scaling", "audit"};

std::string fnv1a_hex(const std::string& text, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    for (char c : text) mix(static_cast<unsigned char>(c));
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

double rate_theory_slope(const DynamicsSpec& spec) {
    switch (spec.family) {
        case Family::Stable: return -1.0 / (2.0 * spec.alpha);
        case Family::Brownian: return -0.25;
        case Family::EllipticDiffusion: return -0.25;
        case Family::Fbm: return -0.75 * spec.hurst;  // d = 1 regime
        case Family::Dyson: return 0.0;               // boundedness check instead
        case Family::Frozen: break;
    }
    throw std::invalid_argument("rates mode: no reference decay for this family");
}

struct TwoScaleSigma {
    double base = 0.0, base_se = 0.0;
    double refined = 0.0, refined_se = 0.0;
};

// One Mecke sweep simulated on the halved step; each path is integrated at
// both resolutions, so the drift isolates the quadrature error.
TwoScaleSigma mecke_sigma_two_scales(const SystemConfig& config, std::size_t n_mc,
                                     const RngStream& root, int workers) {
    const IntensityMeasure nu = config.intensity();
    const TimeGrid coarse = config.grid;
    const TimeGrid fine(coarse.t_end, 0.5 * coarse.dt);
    if (fine.n_steps != 2 * coarse.n_steps)
        throw std::logic_error("mecke_sigma_two_scales: refinement is not nested");

    const std::size_t m = static_cast<std::size_t>(config.dynamics.block_count);
    const int d = config.dynamics.ambient_dim;

    std::vector<double> u_fine(n_mc), u_coarse(n_mc);
    parallel_for_indexed(n_mc, workers, [&](std::size_t i) {
        RngStream stream = root.child(i);
        const std::vector<double> start =
            prepare_start(config.dynamics, nu.sample_point(stream));
        TrapezoidAccumulator acc_fine(fine);
        TrapezoidAccumulator acc_coarse(coarse);
        walk_particle(config.dynamics, start.data(), start.size(), fine, stream,
                      [&](std::size_t k, const double* pos) {
                          double s = 0.0;
                          for (std::size_t b = 0; b < m; ++b)
                              s += config.dynamics.weights[b] *
                                   config.psi.unit_eval(pos + b * static_cast<std::size_t>(d), d);
                          acc_fine.feed(k, s);
                          if (k % 2 == 0) acc_coarse.feed(k / 2, s);
                      });
        u_fine[i] = acc_fine.value();
        u_coarse[i] = acc_coarse.value();
    });

    const double mass = nu.total_mass();
    const auto sigma_of = [&](const std::vector<double>& u, double& value, double& se) {
        double mean_sq = 0.0;
        for (double v : u) mean_sq += v * v;
        mean_sq /= static_cast<double>(n_mc);
        double var = 0.0;
        for (double v : u) {
            const double dlt = v * v - mean_sq;
            var += dlt * dlt;
        }
        var /= static_cast<double>(n_mc);
        value = mass * mean_sq;
        se = mass * std::sqrt(var / static_cast<double>(n_mc));
    };

    TwoScaleSigma out;
    sigma_of(u_coarse, out.base, out.base_se);
    sigma_of(u_fine, out.refined, out.refined_se);
    return out;
}

// The jackknife sees only the scatter of the z-sample; the Mecke mean and
// sigma estimates shift and rescale the whole sample coherently, so their
// errors propagate into dw_hat on top of it. First order: a mean offset of
// delta sigma moves the distance by |delta|, a scale error epsilon by
// E|Z| |epsilon| ~ 0.8 |epsilon|.
double dw_se_with_normalization(double jackknife_se, const MomentReport& moments) {
    const double sigma = std::sqrt(moments.sigma2);
    const double mean_term = moments.mean_a_se / sigma;
    const double scale_term = 0.8 * 0.5 * moments.sigma2_se / moments.sigma2;
    return std::sqrt(jackknife_se * jackknife_se + mean_term * mean_term +
                     scale_term * scale_term);
}

RowReport build_row(const ScenarioConfig& config, double r, std::size_t r_index, RunMode mode,
                    int workers) {
    RowReport row;
    row.r = r;
    const SystemConfig sys = config.system_config(r);
    const RngStream root = RngStream(config.master_seed, r_index);

    RngStream mecke_rng = root.child(1);
    row.moments = mecke_moment_estimators(sys, config.n_mc, mecke_rng, workers);
    row.has_moments = true;

    RngStream z_rng = root.child(2);
    row.z = sample_Z(sys, config.n_reps, row.moments, z_rng, workers);
    row.dw_hat = stats::wasserstein1_to_std_gaussian(row.z);
    row.dw_se = dw_se_with_normalization(stats::wasserstein1_jackknife_se(row.z), row.moments);
    row.has_dw = true;

    if (mode == RunMode::Bounds) {
        const double sqrt2 = 1.4142135623730950488;
        BoundReport& b = row.bounds;
        b.dw_hat = row.dw_hat;
        b.dw_se = row.dw_se;
        b.rhs_mecke = row.moments.rhs_mecke;
        b.rhs_mecke_se = row.moments.rhs_mecke_se;
        b.rhs_m3 = sqrt2 * row.moments.m3;
        b.rhs_m3_se = sqrt2 * row.moments.m3_se;
        b.rhs_zeta = zeta_rhs(row.moments.m3, row.moments.m4);
        b.pass_m3 = b.dw_hat <= b.rhs_m3 + 3.0 * (b.dw_se + b.rhs_m3_se);
        b.pass_mecke = b.dw_hat <= b.rhs_mecke + 3.0 * (b.dw_se + b.rhs_mecke_se);
        b.pass_order = b.rhs_m3 <= b.rhs_mecke + 3.0 * (b.rhs_m3_se + b.rhs_mecke_se);
        row.has_bounds = true;

        const auto var_z = stats::sample_variance_with_se(row.z);
        const double s2u = row.moments.sigma_unit * row.moments.sigma_unit;
        row.var_a_unit = var_z.value * s2u;
        row.var_a_unit_se = var_z.se * s2u;
        row.sigma2_unit = s2u;
        const double scale = config.psi.sup_norm();
        row.sigma2_unit_se = row.moments.sigma2_se / (scale * scale);
        row.pass_variance = std::fabs(row.var_a_unit - row.sigma2_unit) <=
                            3.0 * (row.var_a_unit_se + row.sigma2_unit_se);
        row.has_variance_check = true;

        row.verdict =
            (b.pass_m3 && b.pass_mecke && b.pass_order && row.pass_variance) ? 1 : 0;
    }
    return row;
}

RateCheck build_rate_check(const ScenarioConfig& config, const std::vector<RowReport>& rows) {
    RateCheck rate;
    rate.theory_slope = rate_theory_slope(config.dynamics);

    std::vector<stats::RatePoint> pts;
    for (const auto& row : rows) pts.push_back({row.r, row.dw_hat, row.dw_se});
    rate.fit = stats::loglog_rate_fit(pts);

    const Family family = config.dynamics.family;
    if (family == Family::Dyson) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double q = rows[i].dw_hat * std::sqrt(rows[i].moments.sigma2);
            lo = i == 0 ? q : std::min(lo, q);
            hi = i == 0 ? q : std::max(hi, q);
        }
        rate.dyson_ratio_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        rate.pass = rate.dyson_ratio_spread < 3.0;
        return rate;
    }
    if (family == Family::EllipticDiffusion) {
        rate.pass = rate.fit.slope <= -0.1;
        return rate;
    }

    // Calibrate the constant at the first horizon and demand the theoretical
    // decay at every later one, with 3 combined relative SEs of slack.
    rate.has_calibration = true;
    const double theta = -rate.theory_slope;
    const double c0 = rows.front().dw_hat * std::pow(rows.front().r, theta);
    const double rel0 = rows.front().dw_se / rows.front().dw_hat;
    rate.pass = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double bound = c0 * std::pow(rows[i].r, -theta);
        const double rel_i = rows[i].dw_se / rows[i].dw_hat;
        const bool ok = rows[i].dw_hat <= bound * (1.0 + 3.0 * (rel_i + rel0));
        rate.pass_points.push_back(ok);
        rate.pass = rate.pass && ok;
    }
    return rate;
}

AuditRecord audit_one_horizon(const ScenarioConfig& config, double r, std::size_t r_index,
                              int workers) {
    AuditRecord record;
    record.r = r;
    const SystemConfig sys = config.system_config(r);
    const RngStream root = RngStream(config.master_seed, 0x41554400ULL + r_index);

    const TwoScaleSigma two = mecke_sigma_two_scales(sys, config.n_mc, root.child(1), workers);
    record.sigma2_base = two.base;
    record.sigma2_base_se = two.base_se;
    record.sigma2_refined = two.refined;
    record.sigma2_refined_se = two.refined_se;
    record.dt_drift_rel =
        two.base != 0.0 ? std::fabs(two.refined - two.base) / std::fabs(two.base)
                        : std::fabs(two.refined - two.base);
    record.pass_dt = record.dt_drift_rel < 0.01;

    const SystemConfig wide = sys.with_window_factor(2.0);
    RngStream wide_rng = root.child(2);
    const MomentReport wide_report =
        mecke_moment_estimators(wide, config.n_mc, wide_rng, workers);
    record.sigma2_wide = wide_report.sigma2;
    record.sigma2_wide_se = wide_report.sigma2_se;

    const double scale2 = config.psi.sup_norm() * config.psi.sup_norm();
    const double base_true = record.sigma2_base * scale2;
    const double base_se_true = record.sigma2_base_se * scale2;
    const double denom = base_se_true + record.sigma2_wide_se;
    record.window_shift_ses =
        denom > 0.0 ? std::fabs(record.sigma2_wide - base_true) / denom
                    : (record.sigma2_wide == base_true ? 0.0
                                                       : std::numeric_limits<double>::infinity());
    record.pass_window = record.window_shift_ses <= 3.0;
    return record;
}

}  // namespace

const char* run_mode_name(RunMode mode) { return mode_names[static_cast<int>(mode)]; }

std::optional<RunMode> run_mode_from_name(const std::string& name) {
    for (int i = 0; i < 5; ++i)
        if (name == mode_names[i]) return static_cast<RunMode>(i);
    return std::nullopt;
}

std::vector<AuditRecord> convergence_audit(const ScenarioConfig& config, int workers) {
    std::vector<AuditRecord> out;
    for (std::size_t i = 0; i < config.r_list.size(); ++i)
        out.push_back(audit_one_horizon(config, config.r_list[i], i, workers));
    return out;
}

ReportBundle run_scenario(const ScenarioConfig& config, RunMode mode, int workers) {
    ReportBundle bundle;
    bundle.scenario = config.name;
    bundle.mode = mode;
    bundle.seed = config.master_seed;
    bundle.config_hash = fnv1a_hex(config.source_text, config.master_seed);
    bundle.version = kVersion;

    try {
        switch (mode) {
            case RunMode::Simulate:
            case RunMode::Bounds:
            case RunMode::Rates: {
                for (std::size_t i = 0; i < config.r_list.size(); ++i)
                    bundle.rows.push_back(build_row(config, config.r_list[i], i, mode, workers));
                if (mode == RunMode::Rates) {
                    bundle.rate = build_rate_check(config, bundle.rows);
                    bundle.all_pass = bundle.rate->pass;
                } else if (mode == RunMode::Bounds) {
                    for (const auto& row : bundle.rows)
                        bundle.all_pass = bundle.all_pass && row.verdict == 1;
                }
                break;
            }
            case RunMode::Scaling: {
                theory::ScalingRun run{config.dynamics, config.psi,      config.nu,
                                       config.dt,       config.k_safety, config.n_mc};
                RngStream rng(config.master_seed, 0x5343414CULL);
                bundle.scaling = theory::variance_scaling_check(run, config.r_list, rng,
                                                                config.slope_tolerance, workers);
                bundle.all_pass = bundle.scaling->pass;
                break;
            }
            case RunMode::Audit: {
                bundle.audits = convergence_audit(config, workers);
                for (const auto& a : bundle.audits)
                    bundle.all_pass = bundle.all_pass && a.pass_dt && a.pass_window;
                break;
            }
        }
    } catch (const std::exception& e) {
        bundle.partial = true;
        bundle.error = e.what();
        bundle.all_pass = false;
    }
    return bundle;
}

std::string csv_text(const ReportBundle& bundle) {
    std::ostringstream out;
    out << "r,sigma2,sigma2_se,m3,m3_se,m4,dw_hat,dw_se,rhs_mecke,rhs_mecke_se,rhs_m3,"
           "rhs_zeta,verdict\r\n";
    const auto cell = [](bool present, double v) {
        return present ? csv_field(format_number(v)) : std::string();
    };
    for (const auto& row : bundle.rows) {
        const bool m = row.has_moments;
        const bool b = row.has_bounds;
        out << cell(true, row.r) << ',' << cell(m, row.moments.sigma2) << ','
            << cell(m, row.moments.sigma2_se) << ',' << cell(m, row.moments.m3) << ','
            << cell(m, row.moments.m3_se) << ',' << cell(m, row.moments.m4) << ','
            << cell(row.has_dw, row.dw_hat) << ',' << cell(row.has_dw, row.dw_se) << ','
            << cell(m, row.moments.rhs_mecke) << ',' << cell(m, row.moments.rhs_mecke_se) << ','
            << cell(b, row.bounds.rhs_m3) << ',' << cell(b, row.bounds.rhs_zeta) << ','
            << (row.verdict < 0 ? "" : (row.verdict == 1 ? "pass" : "fail")) << "\r\n";
    }
    if (bundle.scaling) {
        for (const auto& p : bundle.scaling->points)
            out << csv_field(format_number(p.r)) << ',' << csv_field(format_number(p.sigma2))
                << ',' << csv_field(format_number(p.sigma2_se)) << ",,,,,,,,,,\r\n";
    }
    return out.str();
}

std::string json_text(const ReportBundle& bundle) {
    using json = nlohmann::ordered_json;
    json j;
    j["spec_version"] = 1;
    j["scenario"] = bundle.scenario;
    j["mode"] = run_mode_name(bundle.mode);
    j["seed"] = std::to_string(bundle.seed);
    j["config_hash"] = bundle.config_hash;
    j["version"] = bundle.version;

    json rows = json::array();
    for (const auto& row : bundle.rows) {
        json r;
        r["r"] = row.r;
        if (row.has_moments) {
            r["mean_a"] = row.moments.mean_a;
            r["mean_a_se"] = row.moments.mean_a_se;
            r["sigma2"] = row.moments.sigma2;
            r["sigma2_se"] = row.moments.sigma2_se;
            r["m3"] = row.moments.m3;
            r["m3_se"] = row.moments.m3_se;
            r["m4"] = row.moments.m4;
            r["m4_se"] = row.moments.m4_se;
            r["rhs_mecke"] = row.moments.rhs_mecke;
            r["rhs_mecke_se"] = row.moments.rhs_mecke_se;
            r["total_mass"] = row.moments.total_mass;
            r["n_mc"] = row.moments.n_mc;
        }
        if (row.has_dw) {
            r["dw_hat"] = row.dw_hat;
            r["dw_se"] = row.dw_se;
            r["n_reps"] = row.z.size();
        }
        if (row.has_bounds) {
            r["rhs_m3"] = row.bounds.rhs_m3;
            r["rhs_m3_se"] = row.bounds.rhs_m3_se;
            r["rhs_zeta"] = row.bounds.rhs_zeta;
            r["pass_m3"] = row.bounds.pass_m3;
            r["pass_mecke"] = row.bounds.pass_mecke;
            r["pass_order"] = row.bounds.pass_order;
        }
        if (row.has_variance_check) {
            r["var_a_unit"] = row.var_a_unit;
            r["var_a_unit_se"] = row.var_a_unit_se;
            r["sigma2_unit"] = row.sigma2_unit;
            r["sigma2_unit_se"] = row.sigma2_unit_se;
            r["pass_variance"] = row.pass_variance;
        }
        if (row.verdict >= 0) r["verdict"] = row.verdict == 1 ? "pass" : "fail";
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);

    if (bundle.rate) {
        json rate;
        rate["slope"] = bundle.rate->fit.slope;
        rate["intercept"] = bundle.rate->fit.intercept;
        rate["r_squared"] = bundle.rate->fit.r_squared;
        rate["slope_ci_halfwidth"] = bundle.rate->fit.slope_ci_halfwidth;
        rate["theory_slope"] = bundle.rate->theory_slope;
        rate["has_calibration"] = bundle.rate->has_calibration;
        rate["pass_points"] = bundle.rate->pass_points;
        rate["dyson_ratio_spread"] = bundle.rate->dyson_ratio_spread;
        rate["pass"] = bundle.rate->pass;
        j["rate"] = std::move(rate);
    }
    if (bundle.scaling) {
        json s;
        s["family"] = family_name(bundle.scaling->family);
        s["d"] = bundle.scaling->d;
        s["exponent_theory"] = bundle.scaling->exponent_theory;
        s["slope"] = bundle.scaling->exponent_fitted.slope;
        s["intercept"] = bundle.scaling->exponent_fitted.intercept;
        s["r_squared"] = bundle.scaling->exponent_fitted.r_squared;
        s["slope_ci_halfwidth"] = bundle.scaling->exponent_fitted.slope_ci_halfwidth;
        s["tolerance"] = bundle.scaling->tolerance;
        s["pass"] = bundle.scaling->pass;
        json pts = json::array();
        for (const auto& p : bundle.scaling->points)
            pts.push_back({{"r", p.r}, {"sigma2", p.sigma2}, {"sigma2_se", p.sigma2_se}});
        s["points"] = std::move(pts);
        j["scaling"] = std::move(s);
    }
    if (!bundle.audits.empty()) {
        json audits = json::array();
        for (const auto& a : bundle.audits) {
            json rec;
            rec["r"] = a.r;
            rec["sigma2_base"] = a.sigma2_base;
            rec["sigma2_base_se"] = a.sigma2_base_se;
            rec["sigma2_refined"] = a.sigma2_refined;
            rec["sigma2_refined_se"] = a.sigma2_refined_se;
            rec["dt_drift_rel"] = a.dt_drift_rel;
            rec["pass_dt"] = a.pass_dt;
            rec["sigma2_wide"] = a.sigma2_wide;
            rec["sigma2_wide_se"] = a.sigma2_wide_se;
            rec["window_shift_ses"] = a.window_shift_ses;
            rec["pass_window"] = a.pass_window;
            audits.push_back(std::move(rec));
        }
        j["audits"] = std::move(audits);
    }

    j["partial"] = bundle.partial;
    if (bundle.partial) j["error"] = bundle.error;
    j["all_pass"] = bundle.all_pass;
    return j.dump(2) + "\n";
}

namespace {

std::string gnuplot_text(const ReportBundle& bundle, const std::string& csv_name) {
    std::ostringstream out;
    out << "# " << bundle.scenario << " (" << run_mode_name(bundle.mode) << ")\n";
    out << "set datafile separator ','\n";
    out << "set xlabel 'r'\n";
    out << "set logscale xy\n";
    out << "set key left bottom\n";
    if (bundle.mode == RunMode::Scaling) {
        out << "set ylabel 'sigma_r^2'\n";
        out << "plot '" << csv_name << "' every ::1 using 1:2:3 with yerrorlines title 'sigma2'\n";
    } else if (bundle.mode == RunMode::Bounds) {
        out << "set ylabel 'distance'\n";
        out << "plot '" << csv_name << "' every ::1 using 1:7:8 with yerrorlines title 'dw', \\\n"
            << "     '" << csv_name << "' every ::1 using 1:11 with linespoints title 'sqrt(2) m3', \\\n"
            << "     '" << csv_name << "' every ::1 using 1:9 with linespoints title 'mecke rhs'\n";
    } else {
        out << "set ylabel 'dw'\n";
        out << "plot '" << csv_name << "' every ::1 using 1:7:8 with yerrorlines title 'dw'\n";
    }
    return out.str();
}

}  // namespace

OutputPaths write_outputs(const ReportBundle& bundle, const ScenarioConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const std::string stem =
        (fs::path(config.out_dir) / (bundle.scenario + "_" + run_mode_name(bundle.mode)))
            .string();

    OutputPaths paths;
    paths.csv = stem + ".csv";
    paths.json = stem + ".json";
    paths.gnuplot = stem + ".gp";

    {
        std::ofstream f(paths.csv, std::ios::binary);
        f << csv_text(bundle);
    }
    {
        std::ofstream f(paths.json, std::ios::binary);
        f << json_text(bundle);
    }
    {
        std::ofstream f(paths.gnuplot, std::ios::binary);
        f << gnuplot_text(bundle, fs::path(paths.csv).filename().string());
    }

    if (bundle.mode == RunMode::Simulate) {
        paths.z_samples = stem + "_z.csv";
        std::ofstream f(paths.z_samples, std::ios::binary);
        f << "r,rep,z\r\n";
        for (const auto& row : bundle.rows)
            for (std::size_t i = 0; i < row.z.size(); ++i)
                f << format_number(row.r) << ',' << i << ',' << format_number(row.z[i])
                  << "\r\n";
    }
    return paths;
}

int run_selftest(std::ostream& out) {
    int failures = 0;
    const auto check = [&](const char* name, bool ok, const std::string& detail = "") {
        out << (ok ? "ok   " : "FAIL ") << name;
        if (!detail.empty()) out << "  (" << detail << ")";
        out << "\n";
        if (!ok) ++failures;
    };
    const auto near = [](double a, double b, double tol) { return std::fabs(a - b) <= tol; };

    {
        RngStream a(42, 7), b(42, 7), c(42, 8);
        bool same = true, differ = false;
        for (int i = 0; i < 16; ++i) {
            const auto va = a.next_u64();
            same = same && va == b.next_u64();
            differ = differ || va != c.next_u64();
        }
        check("rng stream determinism", same && differ);
    }
    {
        RngStream rng(1, 0);
        const std::size_t n = 20000;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sum += static_cast<double>(rng.poisson(2.0));
        const double mean = sum / static_cast<double>(n);
        check("poisson mean", near(mean, 2.0, 3.0 * std::sqrt(2.0 / static_cast<double>(n))),
              "mean=" + format_number(mean));
    }
    {
        RngStream rng(2, 0);
        auto nu = NuSpec::sinusoidal(1.0, 0.5, 1.0).build(Box::interval(0.0, 2.0));
        const std::size_t n = 20000;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            RngStream s = rng.child(i);
            sum += static_cast<double>(sample_poisson_process(nu, s).points.size());
        }
        const double mean = sum / static_cast<double>(n);
        check("poisson thinning vs quadrature mass",
              near(mean, nu.total_mass(), 3.0 * std::sqrt(nu.total_mass() / static_cast<double>(n))),
              "mean=" + format_number(mean) + " mass=" + format_number(nu.total_mass()));
    }
    {
        RngStream rng(3, 0);
        const std::size_t n = 100000;
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = sample_stable_unit(2.0, rng);
            sum_sq += x * x;
        }
        const double var = sum_sq / static_cast<double>(n);
        check("stable alpha=2 variance", near(var, 2.0, 3.0 * std::sqrt(8.0 / static_cast<double>(n))),
              "var=" + format_number(var));
    }
    {
        RngStream rng(4, 0);
        const std::size_t n = 100000;
        std::vector<double> draws(n);
        for (auto& v : draws) v = sample_stable_unit(1.0, rng);
        std::sort(draws.begin(), draws.end());
        const double q75 = draws[(3 * n) / 4];
        check("stable alpha=1 upper quartile", near(q75, 1.0, 0.05),
              "q75=" + format_number(q75));
    }
    {
        RngStream rng(5, 0);
        const double dev = theory::stable_cf_check(1.5, 1.0, {0.5, 1.0, 2.0}, 100000, rng);
        check("stable characteristic function", dev <= 4.0 / std::sqrt(100000.0),
              "dev=" + format_number(dev));
    }
    {
        RngStream rng(6, 0);
        const TimeGrid grid(1.0, 1.0 / 16.0);
        const std::size_t n = 20000;
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto path = sample_fbm_path(0.7, grid, rng);
            sum_sq += path.back() * path.back();
        }
        const double var = sum_sq / static_cast<double>(n);
        check("fbm variance at t=1", near(var, 1.0, 3.0 * std::sqrt(2.0 / static_cast<double>(n))),
              "var=" + format_number(var));
    }
    {
        RngStream rng(7, 0);
        const auto m = sample_goe_increment(3, 2.0, rng);
        bool symmetric = true;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) symmetric = symmetric && m.at(i, j) == m.at(j, i);
        check("goe symmetry", symmetric);
    }
    {
        SymmetricMatrix m(3);
        m.at(0, 0) = 3.0;
        m.at(1, 1) = 1.0;
        m.at(2, 2) = 2.0;
        const auto eigs = symmetric_eigenvalues(m);
        check("jacobi diagonal", eigs[0] == 1.0 && eigs[1] == 2.0 && eigs[2] == 3.0);
    }
    {
        SymmetricMatrix m(2);
        m.at(0, 1) = 1.0;
        const auto eigs = symmetric_eigenvalues(m);
        check("jacobi off-diagonal pair",
              near(eigs[0], -1.0, 1e-12) && near(eigs[1], 1.0, 1e-12));
    }
    {
        RngStream rng(8, 0);
        const TimeGrid grid(1.0, 0.01);
        const std::size_t n = 10000;
        double sum_sq = 0.0;
        const auto a = [](double) { return 0.5; };
        const auto ap = [](double) { return 0.0; };
        for (std::size_t i = 0; i < n; ++i) {
            const auto path = euler_maruyama_divergence_form(a, ap, 0.5, 0.0, grid, rng);
            sum_sq += path.back() * path.back();
        }
        const double var = sum_sq / static_cast<double>(n);
        check("euler-maruyama constant coefficient",
              near(var, 1.0, 3.0 * std::sqrt(2.0 / static_cast<double>(n))),
              "var=" + format_number(var));
    }
    {
        DynamicsSpec spec;
        spec.family = Family::Frozen;
        spec.block_count = 2;
        spec.weights = {0.5, 1.5};
        RngStream rng(9, 0);
        const TimeGrid grid(4.0, 0.5);
        const auto traj = simulate_particle(spec, {0.0}, grid, rng);
        const auto psi = TestFunction::indicator(Box::interval(-1.0, 1.0));
        const double u = particle_functional_u(traj, psi, spec.weights);
        check("frozen particle functional", near(u, 4.0 * 2.0, 1e-12), "u=" + format_number(u));
    }
    {
        check("zeta rhs arithmetic",
              zeta_rhs(0.0, 3.0) == 0.0 && zeta_rhs(0.5, 3.0) == 0.5 &&
                  near(zeta_rhs(0.2, 3.6), 0.3, 1e-15));
    }
    {
        const double d = stats::wasserstein1_to_std_gaussian({0.0});
        check("wasserstein single atom", near(d, std::sqrt(2.0 / 3.14159265358979323846), 1e-10),
              "d=" + format_number(d));
    }
    {
        bool ok = stats::std_normal_cdf(0.0) == 0.5;
        for (int i = -3; i <= 3; ++i)
            ok = ok && near(stats::std_normal_quantile(stats::std_normal_cdf(i)), i, 1e-8);
        check("normal cdf/quantile round trip", ok);
    }
    {
        const double rayleigh = 1.0 - std::exp(-0.5);
        check("chi small-ball analytic cases",
              near(stats::chi_smallball_cdf(2, 1.0), rayleigh, 1e-10) &&
                  near(stats::chi_smallball_cdf(1, 1.0),
                       2.0 * stats::std_normal_cdf(1.0) - 1.0, 1e-10));
    }
    {
        std::vector<stats::RatePoint> pts;
        for (double r : {16.0, 64.0, 256.0, 1024.0})
            pts.push_back({r, 7.0 * std::pow(r, -0.25), 0.0});
        const auto fit = stats::loglog_rate_fit(pts);
        check("rate fit exact power law",
              near(fit.slope, -0.25, 1e-12) && near(fit.r_squared, 1.0, 1e-12));
    }
    {
        const double v = theory::fbm_conditional_variance(0.5, 0.3, 0.5, 1.0);
        check("fbm conditional variance markov case", near(v, 0.5, 1e-9),
              "v=" + format_number(v));
    }
    {
        const auto rep = theory::check_condition_H_fbm(0.5, 1);
        const double c = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
        check("condition H brownian reduction", rep.pass && near(rep.max_ratio, c, 1e-9),
              "kappa=" + format_number(rep.max_ratio));
    }

    out << (failures == 0 ? "selftest: all checks passed\n"
                          : "selftest: " + std::to_string(failures) + " check(s) failed\n");
    return failures;
}

}  // namespace pslab
