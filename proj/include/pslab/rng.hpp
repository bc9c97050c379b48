#pragma once

#include <cstdint>

namespace pslab {

// Counter-derived random stream. The pair (master_seed, stream_index) fully
// determines the output sequence, and distinct indices give statistically
// independent streams, so replications can be farmed out to workers in any
// order. State is xoshiro256++, seeded through a splitmix64 hash of the pair.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

    // Substream derivation: hash this stream's identity into a fresh master
    // seed, keyed by `index`. Children of one parent never collide.
    RngStream child(std::uint64_t index) const;

    std::uint64_t next_u64();

    double uniform01();       // [0, 1)
    double uniform_open01();  // (0, 1), safe to pass to log()
    double normal();          // N(0,1), Marsaglia polar method
    double exponential();     // Exp(1)

    // Exact Poisson sampling; large means are split into chunks so the
    // product method never underflows.
    std::uint64_t poisson(double mean);

private:
    std::uint64_t poisson_small(double mean);

    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::uint64_t s_[4];
};

}  // namespace pslab
