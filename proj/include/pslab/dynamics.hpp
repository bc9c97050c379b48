#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/samplers.hpp"

namespace pslab {

enum class Family { Frozen, Brownian, Stable, Fbm, EllipticDiffusion, Dyson };

const char* family_name(Family family);

// Tagged selection of one particle-dynamics family with its parameters.
// block_count independent blocks evolve from a common start point and feed
// the weighted Dirac measure a_1 d_{X^1} + ... + a_m d_{X^m}.
struct DynamicsSpec {
    Family family = Family::Brownian;
    int ambient_dim = 1;
    int block_count = 1;
    std::vector<double> weights = {1.0};

    double alpha = 2.0;  // Stable
    double hurst = 0.5;  // Fbm

    std::function<double(double)> diffusion_a;        // EllipticDiffusion
    std::function<double(double)> diffusion_a_prime;  // derivative of a
    double ellipticity = 1.0;                         // a ranges in [eta, 1/eta]

    int dyson_dim = 0;  // Dyson: block_count == dyson_dim, ambient_dim == 1

    void validate() const;
    double weight_sum() const;

    // Typical displacement over horizon r; drives the window inflation.
    double displacement_scale(double horizon) const;
};

struct ParticleTrajectory {
    std::vector<double> start;
    TimeGrid grid;
    int ambient_dim = 1;
    // blocks[i] holds n_points() * ambient_dim coordinates, grid-major.
    std::vector<std::vector<double>> blocks;

    double position(std::size_t block, std::size_t k, int coord) const {
        return blocks[block][k * static_cast<std::size_t>(ambient_dim) +
                             static_cast<std::size_t>(coord)];
    }
};

namespace detail {

void validate_start(const DynamicsSpec& spec, const double* start, std::size_t start_dim);

constexpr double kDysonCollisionTol = 1e-13;

}  // namespace detail

// Streams the particle through the grid, invoking
//   callback(k, positions)
// once per grid index with the m * d block coordinates (block-major).
// Both the materialized trajectory and the fused functional accumulation go
// through this one kernel, so they consume the stream identically.
template <typename Callback>
void walk_particle(const DynamicsSpec& spec, const double* start, std::size_t start_dim,
                   const TimeGrid& grid, RngStream& rng, Callback&& callback) {
    detail::validate_start(spec, start, start_dim);

    const std::size_t m = static_cast<std::size_t>(spec.block_count);
    const std::size_t d = static_cast<std::size_t>(spec.ambient_dim);
    const std::size_t n = grid.n_steps;
    std::vector<double> pos(m * d);

    switch (spec.family) {
        case Family::Frozen: {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t c = 0; c < d; ++c) pos[i * d + c] = start[c];
            for (std::size_t k = 0; k <= n; ++k) callback(k, pos.data());
            return;
        }
        case Family::Brownian:
        case Family::Stable: {
            const bool brownian = spec.family == Family::Brownian;
            const double step_scale = brownian ? std::sqrt(grid.dt)
                                               : std::pow(grid.dt, 1.0 / spec.alpha);
            // Zero-based displacements, translated on output: trajectories
            // from x equal trajectories from 0 shifted by x, exactly.
            std::vector<double> displacement(m * d, 0.0);
            for (std::size_t i = 0; i < m * d; ++i) pos[i] = start[i % d];
            callback(std::size_t{0}, pos.data());
            for (std::size_t k = 1; k <= n; ++k) {
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t c = 0; c < d; ++c) {
                        const double jump = brownian ? rng.normal()
                                                     : sample_stable_unit(spec.alpha, rng);
                        displacement[i * d + c] += step_scale * jump;
                        pos[i * d + c] = start[c] + displacement[i * d + c];
                    }
                }
                callback(k, pos.data());
            }
            return;
        }
        case Family::Fbm: {
            std::vector<std::vector<double>> paths(m * d);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t c = 0; c < d; ++c)
                    paths[i * d + c] = sample_fbm_path(spec.hurst, grid, rng);
            for (std::size_t k = 0; k <= n; ++k) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t c = 0; c < d; ++c)
                        pos[i * d + c] = start[c] + paths[i * d + c][k];
                callback(k, pos.data());
            }
            return;
        }
        case Family::EllipticDiffusion: {
            std::vector<std::vector<double>> paths(m);
            for (std::size_t i = 0; i < m; ++i)
                paths[i] = euler_maruyama_divergence_form(spec.diffusion_a,
                                                          spec.diffusion_a_prime,
                                                          spec.ellipticity, start[0], grid, rng);
            for (std::size_t k = 0; k <= n; ++k) {
                for (std::size_t i = 0; i < m; ++i) pos[i] = paths[i][k];
                callback(k, pos.data());
            }
            return;
        }
        case Family::Dyson: {
            const int dim = spec.dyson_dim;
            SymmetricMatrix x(dim);
            for (int i = 0; i < dim; ++i) x.at(i, i) = start[i];
            const double goe_scale = 1.0 / std::sqrt(static_cast<double>(dim));
            for (int i = 0; i < dim; ++i) pos[static_cast<std::size_t>(i)] = start[i];
            callback(std::size_t{0}, pos.data());
            for (std::size_t k = 1; k <= n; ++k) {
                const SymmetricMatrix g = sample_goe_increment(dim, grid.dt, rng);
                for (std::size_t e = 0; e < x.upper.size(); ++e)
                    x.upper[e] += goe_scale * g.upper[e];
                const std::vector<double> eigs = symmetric_eigenvalues(x);
                for (int i = 0; i + 1 < dim; ++i)
                    if (eigs[static_cast<std::size_t>(i + 1)] - eigs[static_cast<std::size_t>(i)] <=
                        detail::kDysonCollisionTol)
                        throw std::runtime_error("walk_particle: Dyson eigenvalue collision");
                for (int i = 0; i < dim; ++i) pos[static_cast<std::size_t>(i)] = eigs[static_cast<std::size_t>(i)];
                callback(k, pos.data());
            }
            return;
        }
    }
    throw std::logic_error("walk_particle: unhandled family");
}

ParticleTrajectory simulate_particle(const DynamicsSpec& spec, const std::vector<double>& start,
                                     const TimeGrid& grid, RngStream& rng);

// Minimum spectral gap over all grid times of a Dyson trajectory.
double dyson_collision_audit(const ParticleTrajectory& traj);

}  // namespace pslab
