#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "plume/geo.hpp"

namespace plume {

/// Stateless Box-Muller draw (one value per call, pair discarded) so that
/// sampling order alone determines the stream; std::normal_distribution
/// caches a spare value across calls, which breaks replayability.
inline double std_normal(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double u1 = u(rng);
    while (u1 <= 1e-300) u1 = u(rng);
    const double u2 = u(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi_inclusive) {
    std::uniform_int_distribution<int> u(lo, hi_inclusive);
    return u(rng);
}

/// Derives independent substreams from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace plume
