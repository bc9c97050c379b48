#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pslab/rng.hpp"

namespace pslab {

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double volume() const;
    bool contains(const double* x, int d) const;
    bool contains(const std::vector<double>& x) const {
        return contains(x.data(), dim());
    }
    Box inflated(double radius) const;

    static Box interval(double a, double b) { return Box{{a}, {b}}; }
    static Box cube(int d, double a, double b);
};

// Control measure: a density on a rectangular window, bounded above and
// away from zero. The bounds are spot-checked on a grid at construction.
class IntensityMeasure {
public:
    using Density = std::function<double(const std::vector<double>&)>;

    IntensityMeasure(Density density, double rho_min, double rho_max, Box window);

    // Constant density carries its mass exactly instead of by quadrature.
    static IntensityMeasure uniform(double level, Box window);

    double density(const std::vector<double>& x) const { return density_(x); }
    double rho_min() const { return rho_min_; }
    double rho_max() const { return rho_max_; }
    const Box& window() const { return window_; }
    double total_mass() const { return total_mass_; }

    // One point distributed as nu / nu(window), by rejection from the
    // uniform law on the window.
    std::vector<double> sample_point(RngStream& rng) const;

private:
    Density density_;
    double rho_min_;
    double rho_max_;
    Box window_;
    double total_mass_;
};

struct PointSet {
    std::vector<std::vector<double>> points;
    Box window;
};

// Inhomogeneous Poisson process on the window: homogeneous proposal at rate
// rho_max thinned with acceptance probability density(x) / rho_max.
PointSet sample_poisson_process(const IntensityMeasure& nu, RngStream& rng);

struct TimeGrid {
    double t_end = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t_end, double dt);

    std::size_t n_points() const { return n_steps + 1; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

// Symmetric alpha-stable increments with characteristic function
// exp(-t_step * |theta|^alpha), via the Chambers-Mallows-Stuck transform.
// alpha = 2 degenerates to a Gaussian with variance 2 * t_step.
std::vector<double> sample_stable_increments(double alpha, double t_step, std::size_t n,
                                             RngStream& rng);

// Unit-scale draw (t = 1); the hot path used by the dynamics kernels.
double sample_stable_unit(double alpha, RngStream& rng);

// Exact-in-distribution fractional Brownian motion on the grid via circulant
// embedding of the stationary increments (Davies-Harte); falls back to a
// Cholesky factorization of the path covariance when the circulant
// eigenvalues come out materially negative. Returns n_points() values
// starting at 0.
std::vector<double> sample_fbm_path(double hurst, const TimeGrid& grid, RngStream& rng);

struct SymmetricMatrix {
    int dim = 0;
    std::vector<double> upper;  // row-major upper triangle, dim*(dim+1)/2 entries

    explicit SymmetricMatrix(int d);
    double& at(int i, int j);
    double at(int i, int j) const;
};

// Independent N(0, t_step) entries for every i <= j, mirrored below.
SymmetricMatrix sample_goe_increment(int dim, double t_step, RngStream& rng);

// Euler-Maruyama path for the divergence-form generator d/dx(a d/dx) in one
// dimension: drift a'(x), volatility sqrt(2 a(x)). Signals if a(x) leaves
// [eta, 1/eta] along the path.
std::vector<double> euler_maruyama_divergence_form(
    const std::function<double(double)>& a, const std::function<double(double)>& a_prime,
    double eta, double x0, const TimeGrid& grid, RngStream& rng);

// Ascending eigenvalues by cyclic Jacobi rotations, run until the
// off-diagonal Frobenius norm falls below 1e-12 * ||M||.
std::vector<double> symmetric_eigenvalues(const SymmetricMatrix& m);

namespace detail {

// In-place radix-2 complex FFT (interleaved re/im); n must be a power of two.
void fft_pow2(std::vector<double>& re, std::vector<double>& im, bool inverse);

// Unit-spacing fractional Gaussian noise autocovariance at lag k.
double fgn_autocovariance(double hurst, std::size_t lag);

// Lower Cholesky factor with additive jitter; throws if the matrix is not
// positive definite after regularization. Exposed for the fallback tests.
std::vector<double> cholesky_lower(std::vector<double> matrix, std::size_t n, double jitter);

// Cholesky-based fBm path (fallback route); O(n^3) setup.
std::vector<double> fbm_path_cholesky(double hurst, const TimeGrid& grid, RngStream& rng);

}  // namespace detail

}  // namespace pslab
