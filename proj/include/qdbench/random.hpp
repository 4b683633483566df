#pragma once

#include <cstdint>
#include <random>

namespace qdbench {

// std::mt19937_64 and std::seed_seq are fully specified by the standard; the
// distributions below are hand-rolled because the std ones are not, and runs
// must be bit-reproducible across standard libraries.
using Engine = std::mt19937_64;

enum class StreamPurpose : std::uint32_t {
    Initialisation = 1,
    Selection = 2,
    Mutation = 3,
    Oracle = 4,
    Test = 5,
};

/// Independent engine for (root seed, purpose, index).
inline Engine derive_stream(std::uint64_t root, StreamPurpose purpose, std::uint64_t index = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
        static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Engine(seq);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

/// Box-Muller; one engine draw pair per variate.
double standard_normal(Engine& rng);

/// Unbiased integer on [0, n). n must be positive.
std::uint64_t uniform_index(Engine& rng, std::uint64_t n);

} // namespace qdbench
