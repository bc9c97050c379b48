#include "pslab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pslab/toml_lite.hpp"

namespace pslab {

namespace {

class FieldErrors {
public:
    void add(const std::string& field, const std::string& what) {
        messages_.push_back(field + ": " + what);
    }
    bool empty() const { return messages_.empty(); }
    [[noreturn]] void raise(const std::string& name) const {
        std::ostringstream out;
        out << "scenario '" << name << "' has " << messages_.size() << " invalid field(s):";
        for (const auto& m : messages_) out << "\n  - " << m;
        throw std::invalid_argument(out.str());
    }

private:
    std::vector<std::string> messages_;
};

const toml::Table* find_table(const toml::Document& doc, const std::string& key) {
    const auto it = doc.find(key);
    return it == doc.end() ? nullptr : &it->second;
}

const toml::Value* find_value(const toml::Table& table, const std::string& key) {
    const auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

double require_double(const toml::Table& table, const std::string& section,
                      const std::string& key, FieldErrors& errors, double fallback = 0.0) {
    const toml::Value* v = find_value(table, key);
    if (!v) {
        errors.add(section + "." + key, "missing");
        return fallback;
    }
    try {
        return v->as_double();
    } catch (const std::exception& e) {
        errors.add(section + "." + key, e.what());
        return fallback;
    }
}

struct EllipticCoefficient {
    std::function<double(double)> a;
    std::function<double(double)> a_prime;
    double eta;
};

// Named diffusion coefficients available to scenario files.
EllipticCoefficient elliptic_by_name(const std::string& name, double param) {
    if (name == "constant") {
        const double c = param;
        if (!(c > 0.0)) throw std::invalid_argument("constant coefficient must be positive");
        return {[c](double) { return c; }, [](double) { return 0.0; },
                std::min(c, 1.0 / c)};
    }
    if (name == "one_plus_half_sin2") {
        // a(x) = 1 + sin(x)^2 / 2, a'(x) = sin(2x) / 2; range [1, 3/2].
        return {[](double x) {
                    const double s = std::sin(x);
                    return 1.0 + 0.5 * s * s;
                },
                [](double x) { return 0.5 * std::sin(2.0 * x); }, 2.0 / 3.0};
    }
    throw std::invalid_argument("unknown diffusion coefficient '" + name + "'");
}

}  // namespace

ScenarioConfig scenario_from_toml(const std::string& text, const std::string& name,
                                  std::optional<std::uint64_t> seed_override) {
    const toml::Document doc = toml::parse(text);
    FieldErrors errors;

    ScenarioConfig config;
    config.name = name;
    config.source_text = text;

    // [dynamics]
    const toml::Table* dyn = find_table(doc, "dynamics");
    if (!dyn) {
        errors.add("dynamics", "section missing");
    } else {
        const toml::Value* fam = find_value(*dyn, "family");
        std::string family = fam && fam->is_string() ? fam->as_string() : "";
        if (family.empty()) errors.add("dynamics.family", "missing or not a string");

        DynamicsSpec& spec = config.dynamics;
        if (family == "frozen") spec.family = Family::Frozen;
        else if (family == "brownian") spec.family = Family::Brownian;
        else if (family == "stable") spec.family = Family::Stable;
        else if (family == "fbm") spec.family = Family::Fbm;
        else if (family == "elliptic") spec.family = Family::EllipticDiffusion;
        else if (family == "dyson") spec.family = Family::Dyson;
        else if (!family.empty()) errors.add("dynamics.family", "unknown family '" + family + "'");

        if (const toml::Value* v = find_value(*dyn, "ambient_dim"))
            spec.ambient_dim = static_cast<int>(v->as_int());
        if (const toml::Value* v = find_value(*dyn, "block_count"))
            spec.block_count = static_cast<int>(v->as_int());
        if (const toml::Value* v = find_value(*dyn, "weights"))
            spec.weights = v->as_number_array();
        else
            spec.weights.assign(static_cast<std::size_t>(std::max(spec.block_count, 1)), 1.0);

        if (spec.family == Family::Stable)
            spec.alpha = require_double(*dyn, "dynamics", "alpha", errors, 2.0);
        if (spec.family == Family::Fbm)
            spec.hurst = require_double(*dyn, "dynamics", "hurst", errors, 0.5);
        if (spec.family == Family::Dyson) {
            if (const toml::Value* v = find_value(*dyn, "dim")) {
                spec.dyson_dim = static_cast<int>(v->as_int());
                spec.block_count = spec.dyson_dim;
                spec.ambient_dim = 1;
                if (spec.weights.size() != static_cast<std::size_t>(spec.dyson_dim))
                    spec.weights.assign(static_cast<std::size_t>(std::max(spec.dyson_dim, 1)),
                                        1.0);
            } else {
                errors.add("dynamics.dim", "missing (required for dyson)");
            }
        }
        if (spec.family == Family::EllipticDiffusion) {
            const toml::Value* av = find_value(*dyn, "a");
            const std::string coeff = av && av->is_string() ? av->as_string() : "";
            if (coeff.empty()) {
                errors.add("dynamics.a", "missing coefficient name");
            } else {
                double param = 1.0;
                if (const toml::Value* pv = find_value(*dyn, "a_value")) param = pv->as_double();
                try {
                    EllipticCoefficient ec = elliptic_by_name(coeff, param);
                    spec.diffusion_a = ec.a;
                    spec.diffusion_a_prime = ec.a_prime;
                    spec.ellipticity = ec.eta;
                } catch (const std::exception& e) {
                    errors.add("dynamics.a", e.what());
                }
            }
            if (const toml::Value* v = find_value(*dyn, "eta")) spec.ellipticity = v->as_double();
        }

        try {
            spec.validate();
        } catch (const std::exception& e) {
            errors.add("dynamics", e.what());
        }
    }

    // [psi]
    const toml::Table* psi = find_table(doc, "psi");
    if (!psi) {
        errors.add("psi", "section missing");
    } else {
        const toml::Value* kind_v = find_value(*psi, "kind");
        const std::string kind = kind_v && kind_v->is_string() ? kind_v->as_string() : "indicator";
        Box support;
        const toml::Value* lo = find_value(*psi, "lo");
        const toml::Value* hi = find_value(*psi, "hi");
        if (!lo || !hi || !lo->is_number_array() || !hi->is_number_array()) {
            errors.add("psi.lo/psi.hi", "support bounds missing or not numeric arrays");
        } else {
            support.lo = lo->as_number_array();
            support.hi = hi->as_number_array();
            if (support.lo.size() != support.hi.size())
                errors.add("psi.lo/psi.hi", "dimension mismatch");
        }
        double sup_norm = 1.0;
        if (const toml::Value* v = find_value(*psi, "sup_norm")) sup_norm = v->as_double();
        if (!errors.empty() && (support.dim() == 0)) {
            // Leave the default psi in place; the collected errors get raised below.
        } else {
            try {
                if (kind == "indicator")
                    config.psi = TestFunction::indicator(support, sup_norm);
                else if (kind == "bump")
                    config.psi = TestFunction::bump(support, sup_norm);
                else
                    errors.add("psi.kind", "unknown kind '" + kind + "'");
            } catch (const std::exception& e) {
                errors.add("psi", e.what());
            }
        }
    }

    // [nu]
    const toml::Table* nu = find_table(doc, "nu");
    if (!nu) {
        errors.add("nu", "section missing");
    } else {
        const toml::Value* kind_v = find_value(*nu, "kind");
        const std::string kind = kind_v && kind_v->is_string() ? kind_v->as_string() : "uniform";
        try {
            if (kind == "uniform") {
                double level = 1.0;
                if (const toml::Value* v = find_value(*nu, "level")) level = v->as_double();
                config.nu = NuSpec::uniform(level);
            } else if (kind == "sinusoidal") {
                const double base = require_double(*nu, "nu", "base", errors, 1.0);
                const double amp = require_double(*nu, "nu", "amp", errors, 0.5);
                const double wavelength = require_double(*nu, "nu", "wavelength", errors, 1.0);
                if (errors.empty()) config.nu = NuSpec::sinusoidal(base, amp, wavelength);
            } else {
                errors.add("nu.kind", "unknown kind '" + kind + "'");
            }
        } catch (const std::exception& e) {
            errors.add("nu", e.what());
        }
    }

    // [run]
    const toml::Table* run = find_table(doc, "run");
    if (!run) {
        errors.add("run", "section missing");
    } else {
        if (const toml::Value* v = find_value(*run, "r_list")) {
            config.r_list = v->as_number_array();
            if (config.r_list.empty()) errors.add("run.r_list", "must be nonempty");
            for (std::size_t i = 0; i < config.r_list.size(); ++i) {
                if (!(config.r_list[i] > 0.0)) {
                    errors.add("run.r_list", "entries must be positive");
                    break;
                }
                if (i > 0 && !(config.r_list[i] > config.r_list[i - 1])) {
                    errors.add("run.r_list", "must be strictly ascending");
                    break;
                }
            }
        } else {
            errors.add("run.r_list", "missing");
        }

        const toml::Value* dt_abs = find_value(*run, "dt");
        const toml::Value* dt_steps = find_value(*run, "steps_per_r");
        if (dt_abs && dt_steps) {
            errors.add("run.dt", "give either dt or steps_per_r, not both");
        } else if (dt_abs) {
            const double dt = dt_abs->as_double();
            if (!(dt > 0.0)) errors.add("run.dt", "must be positive");
            config.dt = DtPolicy::absolute(dt);
        } else if (dt_steps) {
            const double steps = dt_steps->as_double();
            if (!(steps >= 1.0)) errors.add("run.steps_per_r", "must be >= 1");
            config.dt = DtPolicy::steps(steps);
        } else {
            errors.add("run.dt", "missing (dt or steps_per_r)");
        }

        if (const toml::Value* v = find_value(*run, "k_safety")) config.k_safety = v->as_double();
        if (!(config.k_safety >= 0.0)) errors.add("run.k_safety", "must be >= 0");

        if (const toml::Value* v = find_value(*run, "n_reps")) {
            const std::int64_t n = v->as_int();
            if (n <= 0)
                errors.add("run.n_reps", "must be positive");
            else
                config.n_reps = static_cast<std::size_t>(n);
        } else {
            errors.add("run.n_reps", "missing");
        }

        if (const toml::Value* v = find_value(*run, "n_mc")) {
            const std::int64_t n = v->as_int();
            if (n < 100)
                errors.add("run.n_mc", "must be >= 100");
            else
                config.n_mc = static_cast<std::size_t>(n);
        } else {
            errors.add("run.n_mc", "missing");
        }

        if (seed_override) {
            config.master_seed = *seed_override;
        } else if (const toml::Value* v = find_value(*run, "master_seed")) {
            config.master_seed = static_cast<std::uint64_t>(v->as_int());
        } else {
            errors.add("run.master_seed", "missing (explicit seeding is required)");
        }

        if (const toml::Value* v = find_value(*run, "out_dir")) config.out_dir = v->as_string();
        if (const toml::Value* v = find_value(*run, "slope_tolerance"))
            config.slope_tolerance = v->as_double();
    }

    if (!errors.empty()) errors.raise(name);
    return config;
}

ScenarioConfig load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();

    std::string name = path;
    const std::size_t slash = name.find_last_of("/\\");
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);

    return scenario_from_toml(buffer.str(), name, seed_override);
}

}  // namespace pslab
