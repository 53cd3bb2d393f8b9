#pragma once

#include <cmath>
#include <cstdint>

namespace hd {

// Counter-based Gaussian generator. Every output is a pure function of
// (seed, stream, step, slot), so trajectories can be sampled in any order,
// on any number of threads, and reproduce bit-exactly.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t step, std::uint64_t slot) {
    std::uint64_t k = splitmix64(seed ^ 0x5851f42d4c957f2dull);
    k = splitmix64(k ^ stream);
    k = splitmix64(k ^ (step * 0xd1342543de82ef95ull));
    k = splitmix64(k ^ (slot * 0x2545f4914f6cdd1dull));
    return k;
}

// uniform in (0,1); never returns 0 or 1 exactly
inline double uniform(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated counters.
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t step, std::uint64_t slot) {
    const std::uint64_t k1 = key(seed, stream, step, 2 * slot);
    const std::uint64_t k2 = key(seed, stream, step, 2 * slot + 1);
    const double u1 = uniform(k1);
    const double u2 = uniform(k2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

} // namespace rng

} // namespace hd
