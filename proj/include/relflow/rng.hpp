#ifndef RELFLOW_RNG_HPP
#define RELFLOW_RNG_HPP

#include <cmath>
#include <cstdint>

namespace relflow {

// Counter-based randomness: every sample is a pure function of (seed, counter),
// so results do not depend on how work is partitioned.

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) {
    return detail::mix64(detail::mix64(seed) ^ detail::mix64(counter * 0xd1342543de82ef95ull + 1));
}

/// Uniform deviate in the open interval (0,1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t bits = counter_hash(seed, counter);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal deviate (Box-Muller on two counter draws).
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) {
    const double u1 = counter_uniform(seed, 2 * counter);
    const double u2 = counter_uniform(seed, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

} // namespace relflow

#endif
