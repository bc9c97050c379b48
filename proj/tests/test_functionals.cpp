#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pslab/functionals.hpp"
#include "pslab/stats.hpp"

using namespace pslab;

TEST_SUITE_BEGIN("functionals");

namespace {

DynamicsSpec frozen_spec(std::vector<double> weights = {1.0}) {
    DynamicsSpec spec;
    spec.family = Family::Frozen;
    spec.block_count = static_cast<int>(weights.size());
    spec.weights = std::move(weights);
    return spec;
}

DynamicsSpec brownian_spec() {
    DynamicsSpec spec;
    spec.family = Family::Brownian;
    return spec;
}

SystemConfig make_config(DynamicsSpec spec, double r, double dt, double level = 1.0,
                         double sup_norm = 1.0, double k_safety = 6.0) {
    return SystemConfig{std::move(spec),
                        TestFunction::indicator(Box::interval(-1.0, 1.0), sup_norm),
                        NuSpec::uniform(level),
                        r,
                        TimeGrid(r, dt),
                        k_safety,
                        20000};
}

}  // namespace

TEST_CASE("test function bookkeeping") {
    const auto ind = TestFunction::indicator(Box::interval(-1.0, 3.0), 2.0);
    CHECK(ind.integral() == doctest::Approx(8.0));
    CHECK(ind.eval({0.0}) == 2.0);
    CHECK(ind.eval({4.0}) == 0.0);
    CHECK(ind.nonnegative());

    const auto bump = TestFunction::bump(Box::interval(-1.0, 1.0));
    CHECK(bump.eval({0.0}) == 1.0);          // peak value equals the sup norm
    CHECK(bump.eval({1.0}) == 0.0);          // vanishes at the boundary
    CHECK(bump.eval({0.5}) > 0.0);
    CHECK(bump.integral() < 2.0);
    CHECK(bump.integral() > 0.0);
    // quadrature oracle for the bump mass
    const double oracle = oracles::adaptive_simpson(
        [&](double x) { return bump.eval({x}); }, -1.0, 1.0, 1e-12);
    CHECK(bump.integral() == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("u on a frozen trajectory inside the support is r times the weight sum") {
    const DynamicsSpec spec = frozen_spec({0.5, 1.5});
    const TimeGrid grid(4.0, 0.5);
    RngStream rng(70, 0);
    const auto traj = simulate_particle(spec, {0.25}, grid, rng);
    const auto psi = TestFunction::indicator(Box::interval(-1.0, 1.0));
    CHECK(particle_functional_u(traj, psi, spec.weights) == doctest::Approx(8.0).epsilon(1e-12));

    // zero test function gives zero
    const auto zero = TestFunction::indicator(Box::interval(-1.0, 1.0), 0.0);
    CHECK(particle_functional_u(traj, zero, spec.weights) == 0.0);
}

TEST_CASE("clipped trapezoid handles a grid overshooting the horizon") {
    const DynamicsSpec spec = frozen_spec();
    const TimeGrid grid(1.0, 0.3);  // 4 steps, overshoot 0.2
    RngStream rng(71, 0);
    const auto traj = simulate_particle(spec, {0.0}, grid, rng);
    const auto psi = TestFunction::indicator(Box::interval(-1.0, 1.0));
    CHECK(particle_functional_u(traj, psi, spec.weights) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadrature refinement oracle for a brownian occupation integrand") {
    const DynamicsSpec spec = brownian_spec();
    const double r = 4.0;
    const double dt = 1.0 / 32.0;
    const TimeGrid fine_grid(r, dt / 16.0);
    const auto psi = TestFunction::indicator(Box::interval(-1.0, 1.0));

    RngStream rng(72, 4);
    const auto fine = simulate_particle(spec, {0.0}, fine_grid, rng);
    const double u_fine = particle_functional_u(fine, psi, spec.weights);

    // same path subsampled to the coarse grid
    ParticleTrajectory coarse;
    coarse.start = fine.start;
    coarse.grid = TimeGrid(r, dt);
    coarse.ambient_dim = 1;
    coarse.blocks.assign(1, {});
    for (std::size_t k = 0; k <= coarse.grid.n_steps; ++k)
        coarse.blocks[0].push_back(fine.blocks[0][16 * k]);
    const double u_coarse = particle_functional_u(coarse, psi, spec.weights);

    CHECK(u_fine > 0.5);  // the chosen seed keeps the path near the support
    CHECK(std::fabs(u_coarse - u_fine) <= 0.02 * u_fine);
}

TEST_CASE("streaming functional is bit-identical to the materialized route") {
    for (Family family : {Family::Brownian, Family::Stable, Family::Fbm, Family::Frozen}) {
        DynamicsSpec spec;
        spec.family = family;
        spec.block_count = 2;
        spec.weights = {1.0, 0.5};
        spec.alpha = 1.5;
        spec.hurst = 0.6;
        const TimeGrid grid(2.0, 0.125);
        const auto psi = TestFunction::indicator(Box::interval(-1.0, 1.0), 3.0);
        const double start = 0.5;

        RngStream a(73, 9), b(73, 9);
        const auto traj = simulate_particle(spec, {start}, grid, a);
        const double via_traj = particle_functional_u(traj, psi, spec.weights) / psi.sup_norm();
        const double via_stream =
            particle_functional_u_unit(spec, &start, 1, grid, psi, b);
        CHECK(via_traj == via_stream);
    }
}

TEST_CASE("system functional: empty configuration gives zero") {
    SystemConfig config = make_config(frozen_spec(), 4.0, 0.5, 1e-9);
    RngStream rng(74, 0);
    const auto sample = system_functional_A(config, rng);
    CHECK(sample.a_value == 0.0);
    CHECK(sample.contributions.empty());
}

TEST_CASE("system functional: campbell mean for frozen dynamics") {
    // frozen particles never leave the support, so E[A] = lambda |S| r sum(a)
    SystemConfig config = make_config(frozen_spec({2.0}), 4.0, 0.5, 1.5);
    const std::size_t reps = 20000;
    RngStream rng(75, 0);
    std::vector<double> a_values(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        RngStream s = rng.child(i);
        const auto sample = system_functional_A(config, s);
        a_values[i] = sample.a_value;
        // contributions add up to the total
        double sum = 0.0;
        for (const auto& c : sample.contributions) sum += c.second;
        CHECK(std::fabs(sample.a_value - sum) <= 1e-12 * std::max(1.0, std::fabs(sum)));
    }
    const auto st = oracles::summarize(a_values);
    const double expected = 1.5 * 2.0 * 4.0 * 2.0;
    CHECK(std::fabs(st.mean - expected) <= 3.0 * st.se_mean);
}

TEST_CASE("mecke estimators: frozen closed forms are exact") {
    const double level = 1.0;
    const double r = 4.0;
    SystemConfig config = make_config(frozen_spec({1.0, 1.0}), r, 0.5, level);
    RngStream rng(76, 0);
    const auto report = mecke_moment_estimators(config, 2000, rng);

    const double mass = level * 2.0;  // support volume 2, zero inflation
    const double u = r * 2.0;         // two unit weights
    CHECK(report.total_mass == doctest::Approx(mass).epsilon(1e-12));
    CHECK(report.sigma2 == doctest::Approx(mass * u * u).epsilon(1e-12));
    CHECK(report.sigma2_se == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(report.mean_a == doctest::Approx(mass * u).epsilon(1e-12));
    // deterministic u: m3 = 1/sqrt(mass), m4 = 3 + 1/mass, both exact
    CHECK(report.m3 == doctest::Approx(1.0 / std::sqrt(mass)).epsilon(1e-12));
    CHECK(report.m4 == doctest::Approx(3.0 + 1.0 / mass).epsilon(1e-12));
    // Mecke-form RHS reduces to sqrt(2 / mass)
    CHECK(report.rhs_mecke == doctest::Approx(std::sqrt(2.0 / mass)).epsilon(1e-12));
    // nonnegative psi: the two bound forms coincide
    CHECK(std::sqrt(2.0) * report.m3 <= report.rhs_mecke + 1e-12);
}

TEST_CASE("mecke estimators: zero test function is flagged degenerate") {
    SystemConfig config = make_config(frozen_spec(), 4.0, 0.5, 1.0, 0.0);
    RngStream rng(77, 0);
    CHECK_THROWS_AS(mecke_moment_estimators(config, 500, rng), std::runtime_error);
}

TEST_CASE("mecke estimators: n_mc floor enforced") {
    SystemConfig config = make_config(frozen_spec(), 4.0, 0.5);
    RngStream rng(78, 0);
    CHECK_THROWS_AS(mecke_moment_estimators(config, 50, rng), std::invalid_argument);
}

TEST_CASE("mecke consistency: full-system A mean and variance match the estimators") {
    SystemConfig config = make_config(brownian_spec(), 4.0, 1.0 / 64.0);
    RngStream mecke_rng(79, 1);
    const auto report = mecke_moment_estimators(config, 40000, mecke_rng);

    const std::size_t reps = 10000;
    RngStream rng(79, 2);
    std::vector<double> a_values(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        RngStream s = rng.child(i);
        a_values[i] = system_functional_A(config, s).a_value;
    }
    const auto st = oracles::summarize(a_values);
    // Campbell / Mecke first moment
    CHECK(std::fabs(st.mean - report.mean_a) <= 3.0 * (st.se_mean + report.mean_a_se));
    // the variance identity, the artifact's central self-test
    CHECK(std::fabs(st.variance - report.sigma2) <= 3.0 * (st.se_variance + report.sigma2_se));
}

TEST_CASE("variance ratio across horizons follows the long-run oracle") {
    // oracle: a long Mecke run at both horizons; check: an independent short
    // run reproduces the ratio within 3 combined relative SEs
    SystemConfig c16 = make_config(brownian_spec(), 16.0, 1.0 / 16.0);
    SystemConfig c64 = make_config(brownian_spec(), 64.0, 1.0 / 16.0);

    RngStream long16(80, 1), long64(80, 2), short16(80, 3), short64(80, 4);
    const auto oracle16 = mecke_moment_estimators(c16, 60000, long16);
    const auto oracle64 = mecke_moment_estimators(c64, 60000, long64);
    const auto quick16 = mecke_moment_estimators(c16, 15000, short16);
    const auto quick64 = mecke_moment_estimators(c64, 15000, short64);

    const double oracle_ratio = oracle64.sigma2 / oracle16.sigma2;
    const double quick_ratio = quick64.sigma2 / quick16.sigma2;
    const double rel_se =
        oracle_ratio * (oracle16.sigma2_se / oracle16.sigma2 + oracle64.sigma2_se / oracle64.sigma2 +
                        quick16.sigma2_se / quick16.sigma2 + quick64.sigma2_se / quick64.sigma2);
    CHECK(std::fabs(quick_ratio - oracle_ratio) <= 3.0 * rel_se);
    // the asymptotic exponent 3/2 puts the ratio in the vicinity of 8
    CHECK(quick_ratio > 5.0);
    CHECK(quick_ratio < 11.0);
}

TEST_CASE("rescaling psi moves A and sigma but leaves Z bit-identical") {
    SystemConfig base = make_config(brownian_spec(), 4.0, 0.125, 1.0, 1.0);
    SystemConfig scaled = make_config(brownian_spec(), 4.0, 0.125, 1.0, 7.0);

    RngStream m1(81, 1), m2(81, 1);
    const auto rep1 = mecke_moment_estimators(base, 2000, m1);
    const auto rep2 = mecke_moment_estimators(scaled, 2000, m2);
    CHECK(rep2.sigma2 == doctest::Approx(49.0 * rep1.sigma2).epsilon(1e-12));
    CHECK(rep2.m3 == rep1.m3);  // scale-free, identical draws
    CHECK(rep2.m4 == rep1.m4);

    RngStream z1(81, 2), z2(81, 2);
    const auto za = sample_Z(base, 64, rep1, z1);
    const auto zb = sample_Z(scaled, 64, rep2, z2);
    for (std::size_t i = 0; i < za.size(); ++i) CHECK(za[i] == zb[i]);
}

TEST_CASE("sample_Z: frozen system reproduces the normalized poisson law") {
    const double level = 1.0;
    SystemConfig config = make_config(frozen_spec(), 4.0, 0.5, level);
    const double mass = 2.0;  // lambda |S|

    RngStream mecke_rng(82, 1);
    const auto report = mecke_moment_estimators(config, 2000, mecke_rng);

    RngStream z_rng(82, 2);
    const std::size_t n = 40000;
    const auto z = sample_Z(config, n, report, z_rng);

    // distinct stream indices: consecutive replications differ
    bool all_equal = true;
    for (std::size_t i = 1; i < 10; ++i) all_equal = all_equal && z[i] == z[0];
    CHECK_FALSE(all_equal);

    // skewness oracle for the normalized poisson count
    const auto m3 = stats::moments_with_se(z, 3);
    CHECK(std::fabs(m3.value - 1.0 / std::sqrt(mass)) <= 3.0 * m3.se);

    const auto m4 = stats::moments_with_se(z, 4);
    CHECK(std::fabs(m4.value - (3.0 + 1.0 / mass)) <= 3.0 * m4.se);
}

TEST_CASE("sample_Z: normalization holds up to estimator noise") {
    SystemConfig config = make_config(brownian_spec(), 16.0, 1.0 / 16.0);
    RngStream mecke_rng(83, 1);
    const auto report = mecke_moment_estimators(config, 40000, mecke_rng);

    RngStream z_rng(83, 2);
    const std::size_t n = 4000;
    const auto z = sample_Z(config, n, report, z_rng);

    const auto st = oracles::summarize(z);
    const double mean_tol =
        3.0 * (1.0 / std::sqrt(static_cast<double>(n)) +
               report.mean_a_se / std::sqrt(report.sigma2));
    CHECK(std::fabs(st.mean) <= mean_tol);
    const double var_tol = 3.0 * (st.se_variance + report.sigma2_se / report.sigma2);
    CHECK(std::fabs(st.variance - 1.0) <= var_tol);

    CHECK_THROWS_AS(sample_Z(config, 1, report, z_rng), std::invalid_argument);
}

TEST_CASE("window doubling leaves the variance estimate stable") {
    SystemConfig config = make_config(brownian_spec(), 16.0, 1.0 / 16.0);
    const SystemConfig wide = config.with_window_factor(2.0);
    RngStream r1(84, 1), r2(84, 2);
    const auto a = mecke_moment_estimators(config, 30000, r1);
    const auto b = mecke_moment_estimators(wide, 30000, r2);
    CHECK(std::fabs(a.sigma2 - b.sigma2) <= 3.0 * (a.sigma2_se + b.sigma2_se));
}

TEST_CASE("zeta rhs arithmetic") {
    CHECK(zeta_rhs(0.0, 3.0) == 0.0);
    CHECK(zeta_rhs(0.5, 3.0) == 0.5);
    CHECK(zeta_rhs(0.2, 3.6) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("dyson starts are sorted into the chamber") {
    DynamicsSpec spec;
    spec.family = Family::Dyson;
    spec.dyson_dim = 3;
    spec.block_count = 3;
    spec.ambient_dim = 1;
    spec.weights = {1.0, 1.0, 1.0};
    const auto sorted = prepare_start(spec, {2.0, -1.0, 0.5});
    CHECK(sorted == std::vector<double>{-1.0, 0.5, 2.0});
    CHECK_THROWS_AS(prepare_start(spec, {1.0, 1.0, 2.0}), std::runtime_error);
}

TEST_SUITE_END();
