#pragma once

#include <cmath>
#include <cstdint>

namespace sqg {

/// Counter-based generator: every draw is a pure function of (seed, stream,
/// counter), so realizations split cleanly over (realization index, cell index)
/// and regenerate bit-identically in any evaluation order.
namespace rng {

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed) ^ mix(stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

/// Uniform in (0,1): 53 mantissa bits, never exactly 0 or 1.
inline double uniform(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t h = mix(key ^ mix(counter + 0x632be59bd9b4e019ULL));
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Box-Muller pair: two standard normals from one pair counter.
inline std::pair<double, double> normal_pair(std::uint64_t key, std::uint64_t pair_counter) {
    double u1 = uniform(key, 2 * pair_counter);
    double u2 = uniform(key, 2 * pair_counter + 1);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

/// Standard normal; counters 2m and 2m+1 share one Box-Muller pair.
inline double normal(std::uint64_t key, std::uint64_t counter) {
    auto [z1, z2] = normal_pair(key, counter >> 1);
    return (counter & 1) ? z2 : z1;
}

} // namespace rng
} // namespace sqg
