#include "pslab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pslab/parallel.hpp"

namespace pslab {

namespace {

// Simpson value of the one-dimensional unit bump exp(-u^2 / (1 - u^2)) on
// [-1, 1]; evaluated once, used for the integral bookkeeping.
double unit_bump_line_integral() {
    static const double cached = [] {
        const int n = 4096;
        const double h = 2.0 / n;
        double sum = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double u = -1.0 + k * h;
            const double u2 = u * u;
            const double v = u2 < 1.0 ? std::exp(-u2 / (1.0 - u2)) : 0.0;
            const double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            sum += w * v;
        }
        return sum * h / 3.0;
    }();
    return cached;
}

}  // namespace

TestFunction::TestFunction(Kind kind, Box support, double sup_norm)
    : kind_(kind), support_(std::move(support)), sup_norm_(sup_norm), integral_(0.0) {
    if (support_.dim() == 0 || !(support_.volume() > 0.0))
        throw std::invalid_argument("TestFunction: support must have positive volume");
    if (!(sup_norm_ >= 0.0))
        throw std::invalid_argument("TestFunction: sup_norm must be nonnegative");
    if (kind_ == Kind::IndicatorBox) {
        integral_ = sup_norm_ * support_.volume();
    } else {
        double prod = 1.0;
        for (int i = 0; i < support_.dim(); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            prod *= 0.5 * (support_.hi[ui] - support_.lo[ui]) * unit_bump_line_integral();
        }
        integral_ = sup_norm_ * prod;
    }
}

TestFunction TestFunction::indicator(Box support, double sup_norm) {
    return TestFunction(Kind::IndicatorBox, std::move(support), sup_norm);
}

TestFunction TestFunction::bump(Box support, double sup_norm) {
    return TestFunction(Kind::SmoothBump, std::move(support), sup_norm);
}

double TestFunction::unit_eval(const double* x, int d) const {
    if (d != support_.dim())
        throw std::invalid_argument("TestFunction: dimension mismatch");
    if (kind_ == Kind::IndicatorBox)
        return support_.contains(x, d) ? 1.0 : 0.0;
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double u = (2.0 * x[i] - support_.lo[ui] - support_.hi[ui]) /
                         (support_.hi[ui] - support_.lo[ui]);
        const double u2 = u * u;
        if (u2 >= 1.0) return 0.0;
        acc += u2 / (1.0 - u2);
    }
    return std::exp(-acc);
}

NuSpec NuSpec::uniform(double level) {
    if (!(level > 0.0)) throw std::invalid_argument("NuSpec: level must be positive");
    NuSpec nu;
    nu.density = [level](const std::vector<double>&) { return level; };
    nu.rho_min = nu.rho_max = nu.level = level;
    nu.constant = true;
    return nu;
}

NuSpec NuSpec::sinusoidal(double base, double amp, double wavelength) {
    if (!(base > 0.0) || !(amp >= 0.0) || !(wavelength > 0.0))
        throw std::invalid_argument("NuSpec: sinusoidal needs base > 0, amp >= 0, wavelength > 0");
    NuSpec nu;
    const double freq = 3.14159265358979323846 / wavelength;
    nu.density = [base, amp, freq](const std::vector<double>& x) {
        const double s = std::sin(freq * x[0]);
        return base + amp * s * s;
    };
    nu.rho_min = base;
    nu.rho_max = base + amp;
    nu.constant = false;
    nu.level = base;
    return nu;
}

IntensityMeasure NuSpec::build(const Box& window) const {
    if (constant) return IntensityMeasure::uniform(level, window);
    return IntensityMeasure(density, rho_min, rho_max, window);
}

TimeGrid DtPolicy::make_grid(double horizon) const {
    if (!(value > 0.0)) throw std::invalid_argument("DtPolicy: value must be positive");
    if (kind == Kind::Absolute) return TimeGrid(horizon, value);
    return TimeGrid(horizon, horizon / value);
}

void SystemConfig::validate() const {
    dynamics.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("SystemConfig: horizon must be positive");
    if (std::fabs(grid.t_end - horizon) > 1e-9 * std::max(1.0, horizon))
        throw std::invalid_argument("SystemConfig: grid does not span the horizon");
    if (!(k_safety >= 0.0)) throw std::invalid_argument("SystemConfig: k_safety must be >= 0");
    const int expected_dim =
        dynamics.family == Family::Dyson ? dynamics.dyson_dim : dynamics.ambient_dim;
    if (psi.support().dim() != (dynamics.family == Family::Dyson ? 1 : expected_dim))
        throw std::invalid_argument("SystemConfig: psi support dimension mismatch");
}

IntensityMeasure SystemConfig::intensity() const {
    // Dyson: Poisson points are spectra; the window is a box in R^dim around
    // the psi support on the eigenvalue line, points get sorted into the
    // chamber downstream.
    Box base = psi.support();
    if (dynamics.family == Family::Dyson) {
        const int dim = dynamics.dyson_dim;
        base = Box::cube(dim, psi.support().lo[0], psi.support().hi[0]);
    }
    return nu.build(base.inflated(window_radius()));
}

SystemConfig SystemConfig::with_window_factor(double factor) const {
    SystemConfig out = *this;
    out.k_safety *= factor;
    return out;
}

void TrapezoidAccumulator::feed(std::size_t k, double s) {
    if (k == 0) {
        prev_ = s;
        return;
    }
    if (k < n_) {
        acc_ += 0.5 * dt_ * (prev_ + s);
    } else {
        const double w = t_end_ - dt_ * static_cast<double>(n_ - 1);
        if (w >= dt_) {
            acc_ += 0.5 * dt_ * (prev_ + s);
        } else {
            const double s_at_horizon = prev_ + (s - prev_) * (w / dt_);
            acc_ += 0.5 * w * (prev_ + s_at_horizon);
        }
    }
    prev_ = s;
}

namespace {

void assert_u_bound(double u_unit, const TimeGrid& grid, double weight_sum) {
    const double bound = grid.t_end * weight_sum;
    if (!(std::fabs(u_unit) <= bound * (1.0 + 1e-9) + 1e-12))
        throw std::logic_error("particle functional exceeded its deterministic bound");
}

}  // namespace

double particle_functional_u(const ParticleTrajectory& traj, const TestFunction& psi,
                             const std::vector<double>& weights) {
    const std::size_t m = traj.blocks.size();
    if (weights.size() != m)
        throw std::invalid_argument("particle_functional_u: weights/block mismatch");
    const int d = traj.ambient_dim;

    TrapezoidAccumulator acc(traj.grid);
    for (std::size_t k = 0; k < traj.grid.n_points(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            s += weights[i] *
                 psi.unit_eval(traj.blocks[i].data() + k * static_cast<std::size_t>(d), d);
        acc.feed(k, s);
    }
    double weight_sum = 0.0;
    for (double a : weights) weight_sum += a;
    assert_u_bound(acc.value(), traj.grid, weight_sum);
    return psi.sup_norm() * acc.value();
}

double particle_functional_u_unit(const DynamicsSpec& spec, const double* start,
                                  std::size_t start_dim, const TimeGrid& grid,
                                  const TestFunction& psi, RngStream& rng) {
    const std::size_t m = static_cast<std::size_t>(spec.block_count);
    const int d = spec.ambient_dim;
    TrapezoidAccumulator acc(grid);
    walk_particle(spec, start, start_dim, grid, rng, [&](std::size_t k, const double* pos) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            s += spec.weights[i] * psi.unit_eval(pos + i * static_cast<std::size_t>(d), d);
        acc.feed(k, s);
    });
    assert_u_bound(acc.value(), grid, spec.weight_sum());
    return acc.value();
}

std::vector<double> prepare_start(const DynamicsSpec& spec, std::vector<double> point) {
    if (spec.family != Family::Dyson) return point;
    std::sort(point.begin(), point.end());
    for (std::size_t i = 0; i + 1 < point.size(); ++i)
        if (!(point[i + 1] - point[i] > detail::kDysonCollisionTol))
            throw std::runtime_error("prepare_start: sampled spectrum has coinciding eigenvalues");
    return point;
}

FunctionalSample system_functional_A(const SystemConfig& config, RngStream& rng) {
    config.validate();
    const IntensityMeasure nu = config.intensity();
    const PointSet points = sample_poisson_process(nu, rng);

    FunctionalSample out;
    out.horizon = config.horizon;
    out.contributions.reserve(points.points.size());
    double total_unit = 0.0;
    for (const auto& raw : points.points) {
        const std::vector<double> start = prepare_start(config.dynamics, raw);
        const double u_unit = particle_functional_u_unit(
            config.dynamics, start.data(), start.size(), config.grid, config.psi, rng);
        total_unit += u_unit;
        out.contributions.emplace_back(start, config.psi.sup_norm() * u_unit);
    }
    out.a_value = config.psi.sup_norm() * total_unit;
    return out;
}

namespace {

// One Mecke draw: a start point distributed as nu / nu(W) and an
// independent trajectory from it.
double mecke_draw_u_unit(const SystemConfig& config, const IntensityMeasure& nu,
                         RngStream& rng) {
    const std::vector<double> start = prepare_start(config.dynamics, nu.sample_point(rng));
    return particle_functional_u_unit(config.dynamics, start.data(), start.size(), config.grid,
                                      config.psi, rng);
}

struct MeckeAggregates {
    double a1 = 0, a2 = 0, a3 = 0, a3abs = 0, a4 = 0;
    double var1 = 0, var2 = 0;
    double cov23 = 0, var3 = 0;
    double cov2_3abs = 0, var3abs = 0;
    double cov24 = 0, var4 = 0;
    std::size_t n = 0;
};

MeckeAggregates aggregate(const std::vector<double>& u) {
    MeckeAggregates agg;
    const std::size_t n = u.size();
    agg.n = n;
    for (double v : u) {
        const double v2 = v * v;
        agg.a1 += v;
        agg.a2 += v2;
        agg.a3 += v2 * v;
        agg.a3abs += v2 * std::fabs(v);
        agg.a4 += v2 * v2;
    }
    const double dn = static_cast<double>(n);
    agg.a1 /= dn;
    agg.a2 /= dn;
    agg.a3 /= dn;
    agg.a3abs /= dn;
    agg.a4 /= dn;
    for (double v : u) {
        const double v2 = v * v;
        const double d1 = v - agg.a1;
        const double d2 = v2 - agg.a2;
        const double d3 = v2 * v - agg.a3;
        const double d3a = v2 * std::fabs(v) - agg.a3abs;
        const double d4 = v2 * v2 - agg.a4;
        agg.var1 += d1 * d1;
        agg.var2 += d2 * d2;
        agg.cov23 += d2 * d3;
        agg.var3 += d3 * d3;
        agg.cov2_3abs += d2 * d3a;
        agg.var3abs += d3a * d3a;
        agg.cov24 += d2 * d4;
        agg.var4 += d4 * d4;
    }
    agg.var1 /= dn;
    agg.var2 /= dn;
    agg.cov23 /= dn;
    agg.var3 /= dn;
    agg.cov2_3abs /= dn;
    agg.var3abs /= dn;
    agg.cov24 /= dn;
    agg.var4 /= dn;
    return agg;
}

}  // namespace

MomentReport mecke_moment_estimators(const SystemConfig& config, std::size_t n_mc,
                                     RngStream& rng, int workers) {
    config.validate();
    if (n_mc < 100)
        throw std::invalid_argument("mecke_moment_estimators: n_mc must be >= 100");
    const IntensityMeasure nu = config.intensity();

    std::vector<double> u(n_mc);
    const RngStream root = rng.child(0x4D43);  // draws keyed by index: worker-count free
    parallel_for_indexed(n_mc, workers, [&](std::size_t i) {
        RngStream stream = root.child(i);
        u[i] = mecke_draw_u_unit(config, nu, stream);
    });

    const MeckeAggregates agg = aggregate(u);
    const double mass = nu.total_mass();
    const double scale = config.psi.sup_norm();
    const double dn = static_cast<double>(n_mc);

    if (!(agg.a2 > 0.0))
        throw std::runtime_error("mecke_moment_estimators: degenerate scenario, u vanishes");

    MomentReport report;
    report.n_mc = n_mc;
    report.total_mass = mass;
    report.mean_a_unit = mass * agg.a1;
    report.sigma_unit = std::sqrt(mass * agg.a2);

    report.mean_a = scale * mass * agg.a1;
    report.mean_a_se = scale * mass * std::sqrt(agg.var1 / dn);
    report.sigma2 = scale * scale * mass * agg.a2;
    report.sigma2_se = scale * scale * mass * std::sqrt(agg.var2 / dn);

    // Scale-free ratios: m3 = M a3 / (M a2)^{3/2} etc. Delta method with the
    // joint covariance of the plug-in means.
    const double inv_sqrt_mass = 1.0 / std::sqrt(mass);
    const double a2_15 = std::pow(agg.a2, 1.5);
    const double a2_25 = std::pow(agg.a2, 2.5);

    report.m3 = inv_sqrt_mass * agg.a3 / a2_15;
    {
        const double g2 = -1.5 * inv_sqrt_mass * agg.a3 / a2_25;
        const double g3 = inv_sqrt_mass / a2_15;
        const double var = g2 * g2 * agg.var2 + 2.0 * g2 * g3 * agg.cov23 + g3 * g3 * agg.var3;
        report.m3_se = std::sqrt(std::max(0.0, var) / dn);
    }

    const double sqrt2 = 1.4142135623730950488;
    report.rhs_mecke = sqrt2 * inv_sqrt_mass * agg.a3abs / a2_15;
    {
        const double g2 = -1.5 * sqrt2 * inv_sqrt_mass * agg.a3abs / a2_25;
        const double g3 = sqrt2 * inv_sqrt_mass / a2_15;
        const double var =
            g2 * g2 * agg.var2 + 2.0 * g2 * g3 * agg.cov2_3abs + g3 * g3 * agg.var3abs;
        report.rhs_mecke_se = std::sqrt(std::max(0.0, var) / dn);
    }

    // Fourth moment from the Poisson cumulant structure: kappa_4 = M a4.
    report.m4 = 3.0 + agg.a4 / (mass * agg.a2 * agg.a2);
    {
        const double g2 = -2.0 * agg.a4 / (mass * agg.a2 * agg.a2 * agg.a2);
        const double g4 = 1.0 / (mass * agg.a2 * agg.a2);
        const double var = g2 * g2 * agg.var2 + 2.0 * g2 * g4 * agg.cov24 + g4 * g4 * agg.var4;
        report.m4_se = std::sqrt(std::max(0.0, var) / dn);
    }

    if (report.sigma2 <= 3.0 * report.sigma2_se)
        throw std::runtime_error("mecke_moment_estimators: variance not separated from zero");
    return report;
}

ValueWithSe bound_rhs_mecke(const SystemConfig& config, std::size_t n_mc, RngStream& rng,
                            int workers) {
    const MomentReport report = mecke_moment_estimators(config, n_mc, rng, workers);
    return {report.rhs_mecke, report.rhs_mecke_se};
}

std::vector<double> sample_Z(const SystemConfig& config, std::size_t n_reps,
                             const MomentReport& normalization, RngStream& rng, int workers) {
    config.validate();
    if (n_reps < 2) throw std::invalid_argument("sample_Z: n_reps must be >= 2");
    if (!(normalization.sigma_unit > 0.0))
        throw std::runtime_error("sample_Z: degenerate normalization");

    const IntensityMeasure nu = config.intensity();
    std::vector<double> z(n_reps);
    const RngStream root = rng.child(0x5A52);
    parallel_for_indexed(n_reps, workers, [&](std::size_t i) {
        RngStream stream = root.child(i);
        const PointSet points = sample_poisson_process(nu, stream);
        double a_unit = 0.0;
        for (const auto& raw : points.points) {
            const std::vector<double> start = prepare_start(config.dynamics, raw);
            a_unit += particle_functional_u_unit(config.dynamics, start.data(), start.size(),
                                                 config.grid, config.psi, stream);
        }
        z[i] = (a_unit - normalization.mean_a_unit) / normalization.sigma_unit;
    });
    return z;
}

std::vector<double> sample_Z(const SystemConfig& config, std::size_t n_reps, RngStream& rng,
                             int workers) {
    RngStream mecke_stream = rng.child(0x4D4B);
    const MomentReport normalization =
        mecke_moment_estimators(config, config.n_mc, mecke_stream, workers);
    return sample_Z(config, n_reps, normalization, rng, workers);
}

double zeta_rhs(double m3, double m4) { return m3 + (m4 - 3.0) / 6.0; }

}  // namespace pslab
