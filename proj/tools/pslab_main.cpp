#include <clocale>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pslab/runner.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
    auto* config = cmd->add_option("--config", opts.config_path, "scenario TOML file");
    if (needs_config) config->required();
    cmd->add_option("--seed", [&opts](const std::vector<std::string>& vals) {
        opts.seed = std::stoull(vals.front());
        return true;
    }, "override the scenario master seed");
    cmd->add_option("--workers", opts.workers, "worker threads (results are worker-count independent)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", [&opts](const std::vector<std::string>& vals) {
        opts.out_dir = vals.front();
        return true;
    }, "override the scenario output directory");
}

int run_mode_command(const CommonOptions& opts, pslab::RunMode mode) {
    pslab::ScenarioConfig config = pslab::load_scenario(opts.config_path, opts.seed);
    if (opts.out_dir) config.out_dir = *opts.out_dir;

    const pslab::ReportBundle bundle = pslab::run_scenario(config, mode, opts.workers);
    const pslab::OutputPaths paths = pslab::write_outputs(bundle, config);

    std::cout << "scenario " << bundle.scenario << " [" << pslab::run_mode_name(mode)
              << "], seed " << bundle.seed << ", hash " << bundle.config_hash << "\n";
    for (const auto& row : bundle.rows) {
        std::cout << "  r=" << row.r;
        if (row.has_moments)
            std::cout << "  sigma2=" << row.moments.sigma2 << " m3=" << row.moments.m3;
        if (row.has_dw) std::cout << "  dw=" << row.dw_hat << " (se " << row.dw_se << ")";
        if (row.verdict >= 0) std::cout << "  [" << (row.verdict == 1 ? "pass" : "fail") << "]";
        std::cout << "\n";
    }
    if (bundle.rate) {
        std::cout << "  rate slope=" << bundle.rate->fit.slope
                  << " (theory " << bundle.rate->theory_slope << ")"
                  << "  [" << (bundle.rate->pass ? "pass" : "fail") << "]\n";
    }
    if (bundle.scaling) {
        std::cout << "  scaling slope=" << bundle.scaling->exponent_fitted.slope
                  << " (theory " << bundle.scaling->exponent_theory << ", tol "
                  << bundle.scaling->tolerance << ")  ["
                  << (bundle.scaling->pass ? "pass" : "fail") << "]\n";
    }
    for (const auto& a : bundle.audits) {
        std::cout << "  r=" << a.r << "  dt drift=" << a.dt_drift_rel << " ["
                  << (a.pass_dt ? "pass" : "fail") << "]  window shift=" << a.window_shift_ses
                  << " SE [" << (a.pass_window ? "pass" : "fail") << "]\n";
    }
    if (bundle.partial) std::cout << "  PARTIAL: " << bundle.error << "\n";
    std::cout << "  wrote " << paths.csv << ", " << paths.json << ", " << paths.gnuplot;
    if (!paths.z_samples.empty()) std::cout << ", " << paths.z_samples;
    std::cout << "\n" << (bundle.all_pass ? "PASS" : "FAIL") << "\n";
    return bundle.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_NUMERIC, "C");

    CLI::App app{"Monte Carlo laboratory for additive functionals of Poisson particle systems"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto* simulate = app.add_subcommand("simulate", "draw normalized samples and their Wasserstein distance");
    auto* bounds = app.add_subcommand("bounds", "compare the distance against the moment bounds");
    auto* rates = app.add_subcommand("rates", "decay-rate checks for the distance");
    auto* scaling = app.add_subcommand("scaling", "variance growth exponents");
    auto* audit = app.add_subcommand("audit", "step-size and window truncation audits");
    auto* selftest = app.add_subcommand("selftest", "built-in sampler and estimator checks");
    for (auto* cmd : {simulate, bounds, rates, scaling, audit}) add_common(cmd, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest->parsed()) return pslab::run_selftest(std::cout) == 0 ? 0 : 1;
        if (simulate->parsed()) return run_mode_command(opts, pslab::RunMode::Simulate);
        if (bounds->parsed()) return run_mode_command(opts, pslab::RunMode::Bounds);
        if (rates->parsed()) return run_mode_command(opts, pslab::RunMode::Rates);
        if (scaling->parsed()) return run_mode_command(opts, pslab::RunMode::Scaling);
        if (audit->parsed()) return run_mode_command(opts, pslab::RunMode::Audit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
