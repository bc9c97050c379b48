#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pslab/functionals.hpp"

namespace pslab {

// One scenario file: which system to build, which horizons to sweep, and the
// Monte Carlo budget. Seeding is explicit; there is no wall-clock fallback.
struct ScenarioConfig {
    std::string name;
    DynamicsSpec dynamics;
    TestFunction psi = TestFunction::indicator(Box::interval(-1.0, 1.0));
    NuSpec nu = NuSpec::uniform(1.0);
    std::vector<double> r_list;
    DtPolicy dt;
    double k_safety = 6.0;
    std::size_t n_reps = 0;
    std::size_t n_mc = 0;
    std::uint64_t master_seed = 0;
    std::string out_dir = ".";
    double slope_tolerance = 0.1;  // scaling-mode acceptance band

    std::string source_text;  // raw file content, hashed into the provenance block

    SystemConfig system_config(double r) const {
        return SystemConfig{dynamics, psi, nu, r, dt.make_grid(r), k_safety, n_mc};
    }
};

// Parses and validates a scenario file. Validation failures are collected
// and reported together, naming every offending field.
ScenarioConfig load_scenario(const std::string& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

ScenarioConfig scenario_from_toml(const std::string& text, const std::string& name,
                                  std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace pslab
