#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "pslab/dynamics.hpp"
#include "pslab/rng.hpp"
#include "pslab/samplers.hpp"

namespace pslab {

// Bounded, compactly supported test function. Evaluation is factored as
// sup_norm * unit_eval with unit_eval in [0, 1]; the normalized samples Z
// are computed from unit quantities only, so rescaling psi cannot move them.
class TestFunction {
public:
    enum class Kind { IndicatorBox, SmoothBump };

    static TestFunction indicator(Box support, double sup_norm = 1.0);
    static TestFunction bump(Box support, double sup_norm = 1.0);

    Kind kind() const { return kind_; }
    const Box& support() const { return support_; }
    double sup_norm() const { return sup_norm_; }
    double integral() const { return integral_; }
    bool nonnegative() const { return true; }

    double unit_eval(const double* x, int d) const;
    double eval(const std::vector<double>& x) const {
        return sup_norm_ * unit_eval(x.data(), static_cast<int>(x.size()));
    }

private:
    TestFunction(Kind kind, Box support, double sup_norm);

    Kind kind_;
    Box support_;
    double sup_norm_;
    double integral_;
};

// Density model for the control measure, independent of the window (the
// window is derived from the test-function support and the horizon).
struct NuSpec {
    IntensityMeasure::Density density;
    double rho_min = 1.0;
    double rho_max = 1.0;
    bool constant = true;
    double level = 1.0;

    static NuSpec uniform(double level);
    // base + amp * sin^2(pi * x_0 / wavelength)
    static NuSpec sinusoidal(double base, double amp, double wavelength);

    IntensityMeasure build(const Box& window) const;
};

struct DtPolicy {
    enum class Kind { Absolute, StepsPerHorizon };
    Kind kind = Kind::Absolute;
    double value = 0.0;

    static DtPolicy absolute(double dt) { return {Kind::Absolute, dt}; }
    static DtPolicy steps(double n) { return {Kind::StepsPerHorizon, n}; }
    TimeGrid make_grid(double horizon) const;
};

// Everything needed to draw one realization of A_r[psi] at a fixed horizon.
struct SystemConfig {
    DynamicsSpec dynamics;
    TestFunction psi;
    NuSpec nu;
    double horizon = 1.0;
    TimeGrid grid;
    double k_safety = 6.0;
    std::size_t n_mc = 1000;  // default Mecke sample size

    void validate() const;
    double window_radius() const { return k_safety * dynamics.displacement_scale(horizon); }
    IntensityMeasure intensity() const;
    // Same config with the truncation window inflated by `factor`.
    SystemConfig with_window_factor(double factor) const;
};

struct FunctionalSample {
    double a_value = 0.0;
    std::vector<std::pair<std::vector<double>, double>> contributions;  // (start, u)
    double horizon = 0.0;
};

struct MomentReport {
    double mean_a = 0.0, mean_a_se = 0.0;
    double sigma2 = 0.0, sigma2_se = 0.0;
    double m3 = 0.0, m3_se = 0.0;
    double m4 = 0.0, m4_se = 0.0;
    double rhs_mecke = 0.0, rhs_mecke_se = 0.0;  // sqrt(2) sigma^-3 * mass * E|u|^3
    std::size_t n_mc = 0;
    double total_mass = 0.0;
    // Unit-scale normalization inputs for Z (sup_norm cancels there).
    double mean_a_unit = 0.0;
    double sigma_unit = 0.0;
};

struct BoundReport {
    double dw_hat = 0.0, dw_se = 0.0;
    double rhs_mecke = 0.0, rhs_mecke_se = 0.0;
    double rhs_m3 = 0.0, rhs_m3_se = 0.0;
    double rhs_zeta = 0.0;
    bool pass_m3 = false;     // dw <= sqrt(2) m3 within 3 combined SEs
    bool pass_mecke = false;  // dw <= Mecke-form RHS within 3 combined SEs
    bool pass_order = false;  // rhs_m3 <= rhs_mecke + 3 SE (nonnegative psi)
};

// Trapezoid accumulation of the weighted psi-sum along the grid; the cell
// reaching past the horizon is clipped against the linear interpolant.
class TrapezoidAccumulator {
public:
    TrapezoidAccumulator(const TimeGrid& grid)
        : dt_(grid.dt), t_end_(grid.t_end), n_(grid.n_steps) {}

    void feed(std::size_t k, double s);
    double value() const { return acc_; }

private:
    double dt_;
    double t_end_;
    std::size_t n_;
    double acc_ = 0.0;
    double prev_ = 0.0;
};

// u_r^psi for one materialized trajectory (scaled by sup_norm).
double particle_functional_u(const ParticleTrajectory& traj, const TestFunction& psi,
                             const std::vector<double>& weights);

// Fused walk-and-integrate at unit psi scale; bit-identical to running
// particle_functional_u on simulate_particle output with the same stream.
double particle_functional_u_unit(const DynamicsSpec& spec, const double* start,
                                  std::size_t start_dim, const TimeGrid& grid,
                                  const TestFunction& psi, RngStream& rng);

// For Dyson configs, Poisson points on the spectral box are pushed onto the
// Weyl chamber by sorting; other families use the point as-is.
std::vector<double> prepare_start(const DynamicsSpec& spec, std::vector<double> point);

FunctionalSample system_functional_A(const SystemConfig& config, RngStream& rng);

MomentReport mecke_moment_estimators(const SystemConfig& config, std::size_t n_mc,
                                     RngStream& rng, int workers = 1);

struct ValueWithSe {
    double value = 0.0;
    double se = 0.0;
};

ValueWithSe bound_rhs_mecke(const SystemConfig& config, std::size_t n_mc, RngStream& rng,
                            int workers = 1);

// n_reps independent draws of A_r, centered by the Mecke mean estimate and
// scaled by the Mecke sigma estimate.
std::vector<double> sample_Z(const SystemConfig& config, std::size_t n_reps,
                             const MomentReport& normalization, RngStream& rng,
                             int workers = 1);
std::vector<double> sample_Z(const SystemConfig& config, std::size_t n_reps, RngStream& rng,
                             int workers = 1);

double zeta_rhs(double m3, double m4);

}  // namespace pslab
