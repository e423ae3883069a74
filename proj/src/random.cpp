#include "capforge/random.hpp"

#include <cstdlib>
#include <limits>
#include <string>

namespace capforge {

std::size_t Rng::below(std::size_t n)
{
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
        - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit)
        x = engine_();
    return static_cast<std::size_t>(x % bound);
}

double Rng::unit()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t default_seed()
{
    constexpr std::uint64_t fallback = 42;
    const char* raw = std::getenv("CAPFORGE_SEED");
    if (raw == nullptr || *raw == '\0')
        return fallback;
    try {
        std::size_t used = 0;
        const auto value = std::stoull(raw, &used, 0);
        return used == std::string(raw).size() ? value : fallback;
    } catch (const std::exception&) {
        return fallback;
    }
}

} // namespace capforge
