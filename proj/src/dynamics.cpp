#include "pslab/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pslab {

const char* family_name(Family family) {
    switch (family) {
        case Family::Frozen: return "frozen";
        case Family::Brownian: return "brownian";
        case Family::Stable: return "stable";
        case Family::Fbm: return "fbm";
        case Family::EllipticDiffusion: return "elliptic_diffusion";
        case Family::Dyson: return "dyson";
    }
    return "?";
}

void DynamicsSpec::validate() const {
    if (block_count < 1) throw std::invalid_argument("DynamicsSpec: block_count must be >= 1");
    if (ambient_dim < 1) throw std::invalid_argument("DynamicsSpec: ambient_dim must be >= 1");
    if (weights.size() != static_cast<std::size_t>(block_count))
        throw std::invalid_argument("DynamicsSpec: weights must have block_count entries");
    for (double a : weights)
        if (!(a > 0.0))
            throw std::invalid_argument("DynamicsSpec: weights must be strictly positive");

    switch (family) {
        case Family::Stable:
            if (!(alpha > 0.0 && alpha <= 2.0))
                throw std::invalid_argument("DynamicsSpec: alpha must lie in (0, 2]");
            break;
        case Family::Fbm:
            if (!(hurst > 0.0 && hurst < 1.0))
                throw std::invalid_argument("DynamicsSpec: hurst must lie in (0, 1)");
            break;
        case Family::EllipticDiffusion:
            if (ambient_dim != 1)
                throw std::invalid_argument(
                    "DynamicsSpec: elliptic diffusion is restricted to ambient_dim == 1");
            if (!diffusion_a || !diffusion_a_prime)
                throw std::invalid_argument("DynamicsSpec: diffusion coefficients missing");
            if (!(ellipticity > 0.0 && ellipticity <= 1.0))
                throw std::invalid_argument("DynamicsSpec: ellipticity must lie in (0, 1]");
            break;
        case Family::Dyson:
            if (dyson_dim < 1)
                throw std::invalid_argument("DynamicsSpec: dyson_dim must be >= 1");
            if (block_count != dyson_dim)
                throw std::invalid_argument("DynamicsSpec: Dyson requires block_count == dyson_dim");
            if (ambient_dim != 1)
                throw std::invalid_argument("DynamicsSpec: Dyson eigenvalues live on the line");
            break;
        case Family::Frozen:
        case Family::Brownian:
            break;
    }
}

double DynamicsSpec::weight_sum() const {
    double s = 0.0;
    for (double a : weights) s += a;
    return s;
}

double DynamicsSpec::displacement_scale(double horizon) const {
    switch (family) {
        case Family::Frozen: return 0.0;
        case Family::Brownian:
        case Family::EllipticDiffusion:
        case Family::Dyson: return std::sqrt(horizon);
        case Family::Stable: return std::pow(horizon, 1.0 / alpha);
        case Family::Fbm: return std::pow(horizon, hurst);
    }
    return 0.0;
}

namespace detail {

void validate_start(const DynamicsSpec& spec, const double* start, std::size_t start_dim) {
    spec.validate();
    if (spec.family == Family::Dyson) {
        if (start_dim != static_cast<std::size_t>(spec.dyson_dim))
            throw std::invalid_argument("simulate_particle: Dyson start must list dyson_dim eigenvalues");
        for (std::size_t i = 0; i + 1 < start_dim; ++i)
            if (!(start[i + 1] - start[i] > kDysonCollisionTol))
                throw std::invalid_argument(
                    "simulate_particle: Dyson start must lie in the open Weyl chamber");
        return;
    }
    if (start_dim != static_cast<std::size_t>(spec.ambient_dim))
        throw std::invalid_argument("simulate_particle: start dimension mismatch");
}

}  // namespace detail

ParticleTrajectory simulate_particle(const DynamicsSpec& spec, const std::vector<double>& start,
                                     const TimeGrid& grid, RngStream& rng) {
    ParticleTrajectory traj;
    traj.start = start;
    traj.grid = grid;
    traj.ambient_dim = spec.ambient_dim;
    const std::size_t m = static_cast<std::size_t>(spec.block_count);
    const std::size_t d = static_cast<std::size_t>(spec.ambient_dim);
    traj.blocks.assign(m, std::vector<double>(grid.n_points() * d));

    walk_particle(spec, start.data(), start.size(), grid, rng,
                  [&](std::size_t k, const double* pos) {
                      for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t c = 0; c < d; ++c)
                              traj.blocks[i][k * d + c] = pos[i * d + c];
                  });
    return traj;
}

double dyson_collision_audit(const ParticleTrajectory& traj) {
    if (traj.ambient_dim != 1 || traj.blocks.size() < 2)
        throw std::invalid_argument("dyson_collision_audit: needs an eigenvalue trajectory");
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.grid.n_points(); ++k)
        for (std::size_t i = 0; i + 1 < traj.blocks.size(); ++i)
            min_gap = std::min(min_gap, traj.blocks[i + 1][k] - traj.blocks[i][k]);
    return min_gap;
}

}  // namespace pslab
