#include "pslab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pslab {

double Box::volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
    return v;
}

bool Box::contains(const double* x, int d) const {
    for (int i = 0; i < d; ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

Box Box::inflated(double radius) const {
    Box out = *this;
    for (int i = 0; i < dim(); ++i) {
        out.lo[i] -= radius;
        out.hi[i] += radius;
    }
    return out;
}

Box Box::cube(int d, double a, double b) {
    return Box{std::vector<double>(static_cast<std::size_t>(d), a),
               std::vector<double>(static_cast<std::size_t>(d), b)};
}

namespace {

// Composite Simpson tensor quadrature of the density over the window.
double quadrature_mass(const IntensityMeasure::Density& density, const Box& window) {
    const int d = window.dim();
    const int panels_per_axis = d == 1 ? 512 : (d == 2 ? 128 : 32);
    const int n = panels_per_axis;  // even

    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> step(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        step[static_cast<std::size_t>(i)] =
            (window.hi[static_cast<std::size_t>(i)] - window.lo[static_cast<std::size_t>(i)]) / n;

    const auto simpson_weight = [n](int k) {
        if (k == 0 || k == n) return 1.0;
        return (k % 2 == 1) ? 4.0 : 2.0;
    };

    double sum = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            x[ui] = window.lo[ui] + idx[ui] * step[ui];
            w *= simpson_weight(idx[ui]);
        }
        sum += w * density(x);

        int axis = 0;
        while (axis < d) {
            if (++idx[static_cast<std::size_t>(axis)] <= n) break;
            idx[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == d) break;
    }
    double scale = 1.0;
    for (int i = 0; i < d; ++i) scale *= step[static_cast<std::size_t>(i)] / 3.0;
    return sum * scale;
}

}  // namespace

IntensityMeasure::IntensityMeasure(Density density, double rho_min, double rho_max, Box window)
    : density_(std::move(density)), rho_min_(rho_min), rho_max_(rho_max),
      window_(std::move(window)) {
    if (!(rho_min_ > 0.0))
        throw std::invalid_argument("IntensityMeasure: rho_min must be positive");
    if (!(rho_max_ >= rho_min_))
        throw std::invalid_argument("IntensityMeasure: rho_max must be >= rho_min");
    if (window_.dim() == 0 || !(window_.volume() > 0.0))
        throw std::invalid_argument("IntensityMeasure: window must have positive volume");

    // Spot-check the stated bounds on a coarse grid.
    const int d = window_.dim();
    const int n = 8;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            x[ui] = window_.lo[ui] +
                    (idx[ui] + 0.5) * (window_.hi[ui] - window_.lo[ui]) / n;
        }
        const double v = density_(x);
        if (!(v >= rho_min_ * (1.0 - 1e-12)) || !(v <= rho_max_ * (1.0 + 1e-12)))
            throw std::invalid_argument("IntensityMeasure: density leaves [rho_min, rho_max]");
        int axis = 0;
        while (axis < d) {
            if (++idx[static_cast<std::size_t>(axis)] < n) break;
            idx[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == d) break;
    }

    total_mass_ = quadrature_mass(density_, window_);
}

IntensityMeasure IntensityMeasure::uniform(double level, Box window) {
    const double vol = window.volume();
    IntensityMeasure nu([level](const std::vector<double>&) { return level; }, level, level,
                        std::move(window));
    nu.total_mass_ = level * vol;
    return nu;
}

std::vector<double> IntensityMeasure::sample_point(RngStream& rng) const {
    const int d = window_.dim();
    std::vector<double> x(static_cast<std::size_t>(d));
    for (;;) {
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            x[ui] = window_.lo[ui] + rng.uniform01() * (window_.hi[ui] - window_.lo[ui]);
        }
        if (rng.uniform01() * rho_max_ <= density_(x)) return x;
    }
}

PointSet sample_poisson_process(const IntensityMeasure& nu, RngStream& rng) {
    const Box& window = nu.window();
    const int d = window.dim();
    const std::uint64_t proposal_count = rng.poisson(nu.rho_max() * window.volume());

    PointSet out;
    out.window = window;
    out.points.reserve(proposal_count);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::uint64_t k = 0; k < proposal_count; ++k) {
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            x[ui] = window.lo[ui] + rng.uniform01() * (window.hi[ui] - window.lo[ui]);
        }
        if (rng.uniform01() * nu.rho_max() <= nu.density(x)) out.points.push_back(x);
    }
    return out;
}

TimeGrid::TimeGrid(double t_end_in, double dt_in) : t_end(t_end_in), dt(dt_in) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (t_end < 0.0) throw std::invalid_argument("TimeGrid: t_end must be nonnegative");
    n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
}

double sample_stable_unit(double alpha, RngStream& rng) {
    const double u = 3.14159265358979323846 * (rng.uniform_open01() - 0.5);
    if (std::fabs(alpha - 1.0) < 1e-9) return std::tan(u);  // Cauchy limit of the transform
    if (alpha == 2.0) {
        const double w = rng.exponential();
        return 2.0 * std::sin(u) * std::sqrt(w);
    }
    const double w = rng.exponential();
    const double inv_alpha = 1.0 / alpha;
    return std::sin(alpha * u) / std::pow(std::cos(u), inv_alpha) *
           std::pow(std::cos((1.0 - alpha) * u) / w, (1.0 - alpha) * inv_alpha);
}

std::vector<double> sample_stable_increments(double alpha, double t_step, std::size_t n,
                                             RngStream& rng) {
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::invalid_argument("sample_stable_increments: alpha must lie in (0, 2]");
    if (!(t_step > 0.0))
        throw std::invalid_argument("sample_stable_increments: t_step must be positive");
    const double scale = std::pow(t_step, 1.0 / alpha);
    std::vector<double> out(n);
    for (auto& v : out) v = scale * sample_stable_unit(alpha, rng);
    return out;
}

namespace detail {

void fft_pow2(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    if (n == 0 || (n & (n - 1)) != 0 || im.size() != n)
        throw std::invalid_argument("fft_pow2: length must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = sign * 2.0 * 3.14159265358979323846 / static_cast<double>(len);
        const double wr = std::cos(angle);
        const double wi = std::sin(angle);
        for (std::size_t i = 0; i < n; i += len) {
            double cur_r = 1.0, cur_i = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k;
                const std::size_t b = i + k + len / 2;
                const double tr = re[b] * cur_r - im[b] * cur_i;
                const double ti = re[b] * cur_i + im[b] * cur_r;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double next_r = cur_r * wr - cur_i * wi;
                cur_i = cur_r * wi + cur_i * wr;
                cur_r = next_r;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            re[i] *= inv;
            im[i] *= inv;
        }
    }
}

double fgn_autocovariance(double hurst, std::size_t lag) {
    const double k = static_cast<double>(lag);
    const double h2 = 2.0 * hurst;
    if (lag == 0) return 1.0;
    return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(k - 1.0, h2));
}

std::vector<double> cholesky_lower(std::vector<double> matrix, std::size_t n, double jitter) {
    if (matrix.size() != n * n) throw std::invalid_argument("cholesky_lower: bad dimensions");
    for (std::size_t i = 0; i < n; ++i) matrix[i * n + i] += jitter;
    for (std::size_t j = 0; j < n; ++j) {
        double diag = matrix[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= matrix[j * n + k] * matrix[j * n + k];
        if (!(diag > 0.0))
            throw std::runtime_error("cholesky_lower: matrix not positive definite");
        const double root = std::sqrt(diag);
        matrix[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = matrix[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= matrix[i * n + k] * matrix[j * n + k];
            matrix[i * n + j] = v / root;
        }
        for (std::size_t k = j + 1; k < n; ++k) matrix[j * n + k] = 0.0;
    }
    return matrix;
}

std::vector<double> fbm_path_cholesky(double hurst, const TimeGrid& grid, RngStream& rng) {
    const std::size_t n = grid.n_steps;
    std::vector<double> path(grid.n_points(), 0.0);
    if (n == 0) return path;

    const auto kernel = [hurst](double s, double t) {
        return 0.5 * (std::pow(s, 2.0 * hurst) + std::pow(t, 2.0 * hurst) -
                      std::pow(std::fabs(t - s), 2.0 * hurst));
    };
    std::vector<double> cov(n * n);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            cov[i * n + j] = kernel(grid.time(i + 1), grid.time(j + 1));
        trace += cov[i * n + i];
    }
    const auto lower = cholesky_lower(std::move(cov), n, 1e-12 * trace);

    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= i; ++k) acc += lower[i * n + k] * z[k];
        path[i + 1] = acc;
    }
    return path;
}

namespace {

struct FbmEmbedding {
    double hurst = -1.0;
    std::size_t n_steps = 0;
    std::vector<double> sqrt_eigs;  // sqrt(lambda_k / M), size M
    bool usable = false;
};

// Per-thread cache: scenario loops sample many paths on one fixed grid.
FbmEmbedding& embedding_cache() {
    thread_local FbmEmbedding cache;
    return cache;
}

void build_embedding(FbmEmbedding& emb, double hurst, std::size_t n) {
    emb.hurst = hurst;
    emb.n_steps = n;
    emb.usable = false;

    std::size_t m = 1;
    while (m < 2 * n) m <<= 1;  // embedding size: next power of two >= 2 n
    const std::size_t half = m / 2;

    std::vector<double> re(m, 0.0), im(m, 0.0);
    for (std::size_t k = 0; k <= half; ++k) re[k] = fgn_autocovariance(hurst, k);
    for (std::size_t k = 1; k < half; ++k) re[m - k] = re[k];
    fft_pow2(re, im, false);

    double max_eig = 0.0;
    for (std::size_t k = 0; k < m; ++k) max_eig = std::max(max_eig, re[k]);
    double min_eig = 0.0;
    for (std::size_t k = 0; k < m; ++k) min_eig = std::min(min_eig, re[k]);
    if (min_eig < -1e-9 * max_eig) return;  // materially negative: caller falls back

    emb.sqrt_eigs.resize(m);
    for (std::size_t k = 0; k < m; ++k)
        emb.sqrt_eigs[k] = std::sqrt(std::max(re[k], 0.0) / static_cast<double>(m));
    emb.usable = true;
}

}  // namespace

}  // namespace detail

std::vector<double> sample_fbm_path(double hurst, const TimeGrid& grid, RngStream& rng) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("sample_fbm_path: hurst must lie in (0, 1)");
    const std::size_t n = grid.n_steps;
    std::vector<double> path(grid.n_points(), 0.0);
    if (n == 0) return path;

    auto& emb = detail::embedding_cache();
    if (emb.hurst != hurst || emb.n_steps != n)
        detail::build_embedding(emb, hurst, n);
    if (!emb.usable) return detail::fbm_path_cholesky(hurst, grid, rng);

    const std::size_t m = emb.sqrt_eigs.size();
    const std::size_t half = m / 2;
    std::vector<double> re(m), im(m);
    re[0] = emb.sqrt_eigs[0] * rng.normal();
    im[0] = 0.0;
    re[half] = emb.sqrt_eigs[half] * rng.normal();
    im[half] = 0.0;
    const double inv_sqrt2 = 0.70710678118654752440;
    for (std::size_t k = 1; k < half; ++k) {
        const double a = rng.normal() * inv_sqrt2;
        const double b = rng.normal() * inv_sqrt2;
        re[k] = emb.sqrt_eigs[k] * a;
        im[k] = emb.sqrt_eigs[k] * b;
        re[m - k] = re[k];
        im[m - k] = -im[k];
    }
    detail::fft_pow2(re, im, false);

    // Unit-lag noise rescaled to the grid spacing by self-similarity.
    const double scale = std::pow(grid.dt, hurst);
    double level = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        level += scale * re[k];
        path[k + 1] = level;
    }
    return path;
}

SymmetricMatrix::SymmetricMatrix(int d) : dim(d) {
    if (d < 1) throw std::invalid_argument("SymmetricMatrix: dimension must be >= 1");
    upper.assign(static_cast<std::size_t>(d) * (d + 1) / 2, 0.0);
}

namespace {

inline std::size_t upper_index(int dim, int i, int j) {
    // Row-major upper triangle with i <= j.
    return static_cast<std::size_t>(i) * dim - static_cast<std::size_t>(i) * (i - 1) / 2 +
           static_cast<std::size_t>(j - i);
}

}  // namespace

double& SymmetricMatrix::at(int i, int j) {
    if (i > j) std::swap(i, j);
    return upper[upper_index(dim, i, j)];
}

double SymmetricMatrix::at(int i, int j) const {
    if (i > j) std::swap(i, j);
    return upper[upper_index(dim, i, j)];
}

SymmetricMatrix sample_goe_increment(int dim, double t_step, RngStream& rng) {
    if (dim < 1) throw std::invalid_argument("sample_goe_increment: dim must be >= 1");
    if (!(t_step > 0.0))
        throw std::invalid_argument("sample_goe_increment: t_step must be positive");
    SymmetricMatrix m(dim);
    const double sd = std::sqrt(t_step);
    for (auto& v : m.upper) v = sd * rng.normal();
    return m;
}

std::vector<double> euler_maruyama_divergence_form(
    const std::function<double(double)>& a, const std::function<double(double)>& a_prime,
    double eta, double x0, const TimeGrid& grid, RngStream& rng) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("euler_maruyama_divergence_form: eta must lie in (0, 1]");
    std::vector<double> path(grid.n_points());
    path[0] = x0;
    const double sqrt_dt = std::sqrt(grid.dt);
    double x = x0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double ax = a(x);
        if (!(ax >= eta * (1.0 - 1e-12)) || !(ax <= (1.0 + 1e-12) / eta))
            throw std::runtime_error(
                "euler_maruyama_divergence_form: ellipticity violated along the path");
        x += a_prime(x) * grid.dt + std::sqrt(2.0 * ax) * sqrt_dt * rng.normal();
        path[k + 1] = x;
    }
    return path;
}

std::vector<double> symmetric_eigenvalues(const SymmetricMatrix& m) {
    const int d = m.dim;
    std::vector<double> a(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a[static_cast<std::size_t>(i) * d + j] = m.at(i, j);

    double frob_sq = 0.0;
    for (double v : a) frob_sq += v * v;
    const double off_target_sq = 1e-24 * frob_sq;  // (1e-12 * ||M||)^2

    const auto off_diag_sq = [&]() {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                const double v = a[static_cast<std::size_t>(i) * d + j];
                s += 2.0 * v * v;
            }
        return s;
    };

    int sweeps = 0;
    while (off_diag_sq() > off_target_sq) {
        if (++sweeps > 50)
            throw std::runtime_error("symmetric_eigenvalues: Jacobi sweeps did not converge");
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[static_cast<std::size_t>(p) * d + q];
                if (apq == 0.0) continue;
                const double app = a[static_cast<std::size_t>(p) * d + p];
                const double aqq = a[static_cast<std::size_t>(q) * d + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[static_cast<std::size_t>(k) * d + p];
                    const double akq = a[static_cast<std::size_t>(k) * d + q];
                    a[static_cast<std::size_t>(k) * d + p] = c * akp - s * akq;
                    a[static_cast<std::size_t>(k) * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[static_cast<std::size_t>(p) * d + k];
                    const double aqk = a[static_cast<std::size_t>(q) * d + k];
                    a[static_cast<std::size_t>(p) * d + k] = c * apk - s * aqk;
                    a[static_cast<std::size_t>(q) * d + k] = s * apk + c * aqk;
                }
            }
        }
    }

    std::vector<double> eigs(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) eigs[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i) * d + i];
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

}  // namespace pslab
