#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mvsde {

// Counter-keyed random numbers: every draw is a pure function of its key, so
// any subset of a lattice can be regenerated independently and the result
// does not depend on how work is split across threads.

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ stream);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return mix64(h ^ c);
}

/// Uniform in (0, 1] from the top 53 bits.
inline double unit_open_closed(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Uniform in [0, 1).
inline double unit_closed_open(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Box-Muller standard normal keyed on (seed, stream, a, b, c).
inline double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                           std::uint64_t b, std::uint64_t c) {
    const std::uint64_t h = hash_key(seed, stream, a, b, c);
    const double u1 = unit_open_closed(mix64(h));
    const double u2 = unit_closed_open(mix64(h ^ 0xd1b54a32d192ed03ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double keyed_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                            std::uint64_t b, std::uint64_t c) {
    return unit_closed_open(hash_key(seed, stream, a, b, c));
}

namespace streams {
inline constexpr std::uint64_t brownian = 0;
inline constexpr std::uint64_t initial = 1;
}  // namespace streams

}  // namespace mvsde
