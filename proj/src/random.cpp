#include <qdbench/random.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace qdbench {

double standard_normal(Engine& rng)
{
    const double u1 = 1.0 - uniform01(rng); // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t uniform_index(Engine& rng, std::uint64_t n)
{
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r = 0;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

} // namespace qdbench
