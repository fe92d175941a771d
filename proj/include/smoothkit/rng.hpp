#pragma once

#include <cstdint>

namespace smoothkit {

// ============================================================================
// Counter-based deterministic RNG.
//
// Every random decision in the toolkit is derived from (seed, counter) via a
// stateless mix, so results are reproducible regardless of evaluation order
// or thread count: workers draw by index, never from shared mutable state.
// The mixer is the splitmix64 finalizer, which passes BigCrush.
// ============================================================================

inline std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Uniform double in [0,1) from the top 53 bits.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(hash_counter(seed, counter) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).  n must be > 0.  Uses 64-bit multiply-shift;
// the bias for the n values used here (< 2^32) is below 2^-32 and irrelevant.
inline std::uint64_t uniform_int(std::uint64_t seed, std::uint64_t counter,
                                 std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(hash_counter(seed, counter)) * n) >> 64);
}

} // namespace smoothkit
