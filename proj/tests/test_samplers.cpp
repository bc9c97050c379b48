#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pslab/rng.hpp"
#include "pslab/samplers.hpp"

using namespace pslab;

TEST_SUITE_BEGIN("samplers");

TEST_CASE("rng streams are reproducible and index-separated") {
    RngStream a(123, 5), b(123, 5), c(123, 6);
    bool identical = true;
    for (int i = 0; i < 64; ++i) identical = identical && a.next_u64() == b.next_u64();
    CHECK(identical);

    // distinct indices decorrelate
    RngStream u(123, 5);
    std::vector<double> xs(20000), ys(20000);
    for (auto& v : xs) v = u.uniform01();
    for (auto& v : ys) v = c.uniform01();
    CHECK(std::fabs(oracles::correlation(xs, ys)) <= 3.0 / std::sqrt(20000.0));

    // child streams are reproducible too
    RngStream p(9, 1);
    RngStream k1 = p.child(3), k2 = p.child(3), k3 = p.child(4);
    CHECK(k1.next_u64() == k2.next_u64());
    CHECK(k1.next_u64() != k3.next_u64());
}

TEST_CASE("time grid covers the horizon") {
    const TimeGrid g(16.0, 0.125);
    CHECK(g.n_steps == 128);
    CHECK(g.time(g.n_steps) == doctest::Approx(16.0));

    const TimeGrid odd(1.0, 0.3);
    CHECK(odd.n_steps == 4);
    CHECK(odd.n_steps * odd.dt >= odd.t_end);

    CHECK_THROWS_AS(TimeGrid(1.0, 0.0), std::invalid_argument);
    CHECK_NOTHROW(TimeGrid(0.0, 0.5));  // single-point grid
}

TEST_CASE("intensity measure rejects invalid setups") {
    CHECK_THROWS_AS(IntensityMeasure::uniform(1.0, Box::interval(1.0, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(IntensityMeasure([](const std::vector<double>&) { return 1.0; }, 0.0, 1.0,
                                     Box::interval(0.0, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(IntensityMeasure([](const std::vector<double>&) { return 1.0; }, -1.0, 1.0,
                                     Box::interval(0.0, 1.0)),
                    std::invalid_argument);
    // density escaping the declared bounds is caught by the spot check
    CHECK_THROWS_AS(IntensityMeasure([](const std::vector<double>& x) { return 1.0 + x[0]; },
                                     1.0, 1.1, Box::interval(0.0, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("poisson process: constant density mean count") {
    const auto nu = IntensityMeasure::uniform(2.0, Box::interval(0.0, 1.0));
    RngStream rng(11, 0);
    const std::size_t reps = 100000;
    double sum = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
        RngStream s = rng.child(i);
        sum += static_cast<double>(sample_poisson_process(nu, s).points.size());
    }
    const double mean = sum / static_cast<double>(reps);
    CHECK(std::fabs(mean - 2.0) <= 3.0 * std::sqrt(2.0 / static_cast<double>(reps)));
}

TEST_CASE("poisson process: sinusoidal density matches the quadrature oracle") {
    const double pi = 3.14159265358979323846;
    const auto density = [pi](const std::vector<double>& x) {
        const double s = std::sin(pi * x[0]);
        return 1.0 + 0.5 * s * s;
    };
    const IntensityMeasure nu(density, 1.0, 1.5, Box::interval(0.0, 2.0));

    const double oracle_mass = oracles::adaptive_simpson(
        [&](double x) { return density({x}); }, 0.0, 2.0, 1e-12);
    CHECK(nu.total_mass() == doctest::Approx(oracle_mass).epsilon(1e-9));

    RngStream rng(12, 0);
    const std::size_t reps = 60000;
    double sum = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
        RngStream s = rng.child(i);
        sum += static_cast<double>(sample_poisson_process(nu, s).points.size());
    }
    const double mean = sum / static_cast<double>(reps);
    CHECK(std::fabs(mean - oracle_mass) <=
          3.0 * std::sqrt(oracle_mass / static_cast<double>(reps)));
}

TEST_CASE("poisson process: thinning path, mean equals variance, disjoint boxes decorrelate") {
    // density pinned at rho_min with a loose proposal bound exercises thinning
    const IntensityMeasure nu([](const std::vector<double>&) { return 0.75; }, 0.75, 3.0,
                              Box::interval(0.0, 4.0));
    RngStream rng(13, 0);
    const std::size_t reps = 40000;
    std::vector<double> left(reps), right(reps);
    double total = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
        RngStream s = rng.child(i);
        const auto ps = sample_poisson_process(nu, s);
        double nl = 0.0, nr = 0.0;
        for (const auto& p : ps.points) (p[0] < 2.0 ? nl : nr) += 1.0;
        left[i] = nl;
        right[i] = nr;
        total += nl + nr;
    }
    const double mean = total / static_cast<double>(reps);
    CHECK(std::fabs(mean - 3.0) <= 3.0 * std::sqrt(3.0 / static_cast<double>(reps)));

    const auto sl = oracles::summarize(left);
    CHECK(std::fabs(sl.mean - 1.5) <= 3.0 * sl.se_mean);
    CHECK(std::fabs(sl.variance - 1.5) <= 3.0 * (sl.se_variance + sl.se_mean));
    CHECK(std::fabs(oracles::correlation(left, right)) <=
          3.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("stable increments: parameter validation") {
    RngStream rng(14, 0);
    CHECK_THROWS_AS(sample_stable_increments(0.0, 1.0, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_stable_increments(2.5, 1.0, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_stable_increments(1.0, 0.0, 4, rng), std::invalid_argument);
}

TEST_CASE("stable increments: gaussian endpoint has variance 2 t") {
    RngStream rng(15, 0);
    const std::size_t n = 1000000;
    const auto xs = sample_stable_increments(2.0, 1.0, n, rng);
    double sum_sq = 0.0;
    for (double x : xs) sum_sq += x * x;
    const double var = sum_sq / static_cast<double>(n);
    // Var(X^2) = 2 sigma^4 = 8 for sigma^2 = 2
    CHECK(std::fabs(var - 2.0) <= 3.0 * std::sqrt(8.0 / static_cast<double>(n)));
}

TEST_CASE("stable increments: cauchy quartiles") {
    RngStream rng(16, 0);
    const std::size_t n = 1000000;
    auto xs = sample_stable_increments(1.0, 1.0, n, rng);
    std::sort(xs.begin(), xs.end());
    const double median = xs[n / 2];
    const double q75 = xs[(3 * n) / 4];
    // SE of a sample quantile: sqrt(p(1-p)/n) / f(q), with the Cauchy density
    const double se_med = std::sqrt(0.25 / static_cast<double>(n)) * 3.14159265358979323846;
    const double se_q75 =
        std::sqrt(0.1875 / static_cast<double>(n)) * 2.0 * 3.14159265358979323846;
    CHECK(std::fabs(median) <= 3.0 * se_med);
    CHECK(std::fabs(q75 - 1.0) <= 3.0 * se_q75);
}

TEST_CASE("stable increments: characteristic function across the alpha range") {
    const std::vector<double> thetas = {0.5, 1.0, 2.0};
    const std::size_t n = 200000;
    for (double alpha : {0.8, 1.0, 1.5, 2.0}) {
        RngStream rng(17, static_cast<std::uint64_t>(alpha * 10));
        const auto xs = sample_stable_increments(alpha, 1.0, n, rng);
        for (double theta : thetas) {
            double acc = 0.0;
            for (double x : xs) acc += std::cos(theta * x);
            const double empirical = acc / static_cast<double>(n);
            const double exact = std::exp(-std::pow(theta, alpha));
            CHECK(std::fabs(empirical - exact) <= 4.0 / std::sqrt(static_cast<double>(n)));
        }
    }
}

TEST_CASE("fbm: brownian case has independent increments") {
    RngStream rng(18, 0);
    const TimeGrid grid(1.0, 0.25);
    const std::size_t n = 20000;
    std::vector<double> inc1(n), inc2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto path = sample_fbm_path(0.5, grid, rng);
        inc1[i] = path[1] - path[0];
        inc2[i] = path[3] - path[2];
    }
    CHECK(std::fabs(oracles::correlation(inc1, inc2)) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fbm: variance at t=1 for H=0.7") {
    RngStream rng(19, 0);
    const TimeGrid grid(1.0, 1.0 / 16.0);
    const std::size_t n = 100000;
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i) terminal[i] = sample_fbm_path(0.7, grid, rng).back();
    const auto s = oracles::summarize(terminal);
    CHECK(std::fabs(s.mean) <= 3.0 * s.se_mean);
    CHECK(std::fabs(s.variance - 1.0) <= 3.0 * s.se_variance);
}

TEST_CASE("fbm: covariance formula at (0.5, 1.0) for H=0.3") {
    RngStream rng(20, 0);
    const TimeGrid grid(1.0, 1.0 / 16.0);
    const std::size_t n = 100000;
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto path = sample_fbm_path(0.3, grid, rng);
        prod[i] = path[8] * path[16];
    }
    // K(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2 = 0.5 here
    const double expected = 0.5 * (std::pow(0.5, 0.6) + 1.0 - std::pow(0.5, 0.6));
    const auto s = oracles::summarize(prod);
    CHECK(std::fabs(s.mean - expected) <= 3.0 * s.se_mean);
}

TEST_CASE("fbm: covariance matrix reconstruction on a 16-point grid") {
    const double hurst = 0.65;
    const TimeGrid grid(1.0, 1.0 / 16.0);
    const std::size_t n = 100000;
    RngStream rng(21, 0);

    std::vector<std::vector<double>> paths(n);
    for (std::size_t i = 0; i < n; ++i) paths[i] = sample_fbm_path(hurst, grid, rng);

    const auto kernel = [hurst](double s, double t) {
        return 0.5 * (std::pow(s, 2 * hurst) + std::pow(t, 2 * hurst) -
                      std::pow(std::fabs(t - s), 2 * hurst));
    };
    int violations = 0;
    double worst_z = 0.0;
    for (std::size_t a = 1; a <= 16; ++a) {
        for (std::size_t b = a; b <= 16; ++b) {
            double mean = 0.0;
            for (const auto& p : paths) mean += p[a] * p[b];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (const auto& p : paths) {
                const double d = p[a] * p[b] - mean;
                var += d * d;
            }
            const double se =
                std::sqrt(var / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
            const double exact = kernel(grid.time(a), grid.time(b));
            const double z = std::fabs(mean - exact) / se;
            worst_z = std::max(worst_z, z);
            if (z > 3.0) ++violations;
        }
    }
    // the 136 entry statistics share paths, so their errors are strongly
    // correlated: allow one common fluctuation to push a cluster past 3 SE,
    // but nothing may stray far
    CHECK(violations <= 10);
    CHECK(worst_z < 4.5);
}

TEST_CASE("fbm: cholesky fallback agrees with the covariance and bad kernels throw") {
    const TimeGrid grid(1.0, 0.25);
    RngStream rng(22, 0);
    const std::size_t n = 50000;
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i)
        terminal[i] = detail::fbm_path_cholesky(0.7, grid, rng).back();
    const auto s = oracles::summarize(terminal);
    CHECK(std::fabs(s.variance - 1.0) <= 3.0 * s.se_variance);

    // non-PSD input reaches the error path of the factorization
    std::vector<double> bad = {1.0, 2.0, 2.0, 1.0};
    CHECK_THROWS_AS(detail::cholesky_lower(bad, 2, 1e-12), std::runtime_error);
}

TEST_CASE("goe increments: entry variances, symmetry, and additivity") {
    RngStream rng(23, 0);
    const std::size_t n = 100000;

    std::vector<double> scalar(n);
    for (std::size_t i = 0; i < n; ++i) scalar[i] = sample_goe_increment(1, 0.5, rng).at(0, 0);
    const auto s1 = oracles::summarize(scalar);
    CHECK(std::fabs(s1.variance - 0.5) <= 3.0 * s1.se_variance);

    std::vector<double> diag(n), off(n), sum12(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = sample_goe_increment(3, 2.0, rng);
        CHECK(g.at(0, 2) == g.at(2, 0));
        diag[i] = g.at(1, 1);
        off[i] = g.at(0, 2);
        const auto h1 = sample_goe_increment(2, 0.75, rng);
        const auto h2 = sample_goe_increment(2, 0.25, rng);
        sum12[i] = h1.at(0, 1) + h2.at(0, 1);
    }
    const auto sd = oracles::summarize(diag);
    const auto so = oracles::summarize(off);
    const auto ss = oracles::summarize(sum12);
    CHECK(std::fabs(sd.variance - 2.0) <= 3.0 * sd.se_variance);
    CHECK(std::fabs(so.variance - 2.0) <= 3.0 * so.se_variance);
    // gaussian convolution: t1 + t2 = 1
    CHECK(std::fabs(ss.variance - 1.0) <= 3.0 * ss.se_variance);
}

TEST_CASE("euler-maruyama: constant coefficient reduces to scaled brownian motion") {
    const double c = 0.8;
    const auto a = [c](double) { return c; };
    const auto ap = [](double) { return 0.0; };
    RngStream rng(24, 0);
    const TimeGrid grid(2.0, 0.01);
    const std::size_t n = 20000;
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i)
        terminal[i] = euler_maruyama_divergence_form(a, ap, 0.8, 1.0, grid, rng).back();
    const auto s = oracles::summarize(terminal);
    CHECK(std::fabs(s.mean - 1.0) <= 3.0 * s.se_mean);
    CHECK(std::fabs(s.variance - 2.0 * c * 2.0) <= 3.0 * s.se_variance);
}

TEST_CASE("euler-maruyama: a = 1/2 terminal law passes a KS test against N(0, t)") {
    const auto a = [](double) { return 0.5; };
    const auto ap = [](double) { return 0.0; };
    RngStream rng(25, 0);
    const TimeGrid grid(1.0, 0.005);
    const std::size_t n = 5000;
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i)
        terminal[i] = euler_maruyama_divergence_form(a, ap, 0.5, 0.0, grid, rng).back();
    const double ks =
        oracles::ks_statistic(terminal, [](double x) { return oracles::normal_cdf(x); });
    CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));  // 1% critical value
}

TEST_CASE("euler-maruyama: self-refinement oracle for a smooth coefficient") {
    const auto a = [](double x) {
        const double s = std::sin(x);
        return 1.0 + 0.5 * s * s;
    };
    const auto ap = [](double x) { return 0.5 * std::sin(2.0 * x); };
    const std::size_t n = 20000;

    const auto run = [&](double dt, std::uint64_t seed) {
        RngStream rng(seed, 0);
        const TimeGrid grid(1.0, dt);
        std::vector<double> terminal(n);
        for (std::size_t i = 0; i < n; ++i)
            terminal[i] = euler_maruyama_divergence_form(a, ap, 0.6, 0.0, grid, rng).back();
        return oracles::summarize(terminal);
    };
    const auto coarse = run(1e-3, 26);
    const auto fine = run(1e-4, 27);
    CHECK(std::fabs(coarse.mean - fine.mean) <= 3.0 * (coarse.se_mean + fine.se_mean));
    CHECK(std::fabs(coarse.variance - fine.variance) <=
          3.0 * (coarse.se_variance + fine.se_variance));
}

TEST_CASE("euler-maruyama: ellipticity violation is signalled") {
    const auto a = [](double) { return 0.05; };
    const auto ap = [](double) { return 0.0; };
    RngStream rng(28, 0);
    const TimeGrid grid(1.0, 0.1);
    CHECK_THROWS_AS(euler_maruyama_divergence_form(a, ap, 0.5, 0.0, grid, rng),
                    std::runtime_error);
}

TEST_CASE("jacobi eigensolver: analytic cases") {
    SymmetricMatrix diag(3);
    diag.at(0, 0) = 3.0;
    diag.at(1, 1) = 1.0;
    diag.at(2, 2) = 2.0;
    const auto e1 = symmetric_eigenvalues(diag);
    CHECK(e1 == std::vector<double>{1.0, 2.0, 3.0});

    SymmetricMatrix swap(2);
    swap.at(0, 1) = 1.0;
    const auto e2 = symmetric_eigenvalues(swap);
    CHECK(e2[0] == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(e2[1] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("jacobi eigensolver: trace and frobenius invariants on random matrices") {
    RngStream rng(29, 0);
    for (int rep = 0; rep < 20; ++rep) {
        SymmetricMatrix m(6);
        for (auto& v : m.upper) v = rng.normal();
        const auto eigs = symmetric_eigenvalues(m);
        double trace = 0.0, frob = 0.0;
        for (int i = 0; i < 6; ++i) {
            trace += m.at(i, i);
            for (int j = 0; j < 6; ++j) frob += m.at(i, j) * m.at(i, j);
        }
        double sum = 0.0, sum_sq = 0.0;
        for (double e : eigs) {
            sum += e;
            sum_sq += e * e;
        }
        CHECK(std::fabs(sum - trace) < 1e-10);
        CHECK(std::fabs(sum_sq - frob) < 1e-10);
        CHECK(std::is_sorted(eigs.begin(), eigs.end()));
    }
}

TEST_CASE("jacobi eigensolver: invariant under orthogonal similarity") {
    RngStream rng(30, 0);
    const int d = 5;
    SymmetricMatrix m(d);
    for (auto& v : m.upper) v = rng.normal();

    // random orthogonal Q by Gram-Schmidt on a gaussian matrix
    std::vector<std::vector<double>> q(d, std::vector<double>(d));
    for (auto& row : q)
        for (auto& v : row) v = rng.normal();
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) {
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += q[i][k] * q[j][k];
            for (int k = 0; k < d; ++k) q[i][k] -= dot * q[j][k];
        }
        double norm = 0.0;
        for (int k = 0; k < d; ++k) norm += q[i][k] * q[i][k];
        norm = std::sqrt(norm);
        for (int k = 0; k < d; ++k) q[i][k] /= norm;
    }

    SymmetricMatrix rotated(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) acc += q[k][i] * m.at(k, l) * q[l][j];
            rotated.at(i, j) = acc;
        }

    const auto e1 = symmetric_eigenvalues(m);
    const auto e2 = symmetric_eigenvalues(rotated);
    for (int i = 0; i < d; ++i) CHECK(std::fabs(e1[i] - e2[i]) < 1e-10);
}

TEST_SUITE_END();
