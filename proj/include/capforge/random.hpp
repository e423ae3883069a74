#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace capforge {

/// Seeded generator with platform-independent draws.
///
/// std::uniform_int_distribution and friends are implementation-defined,
/// so golden documents would differ between standard libraries. Bounded
/// and real draws are derived here directly from mt19937_64, whose output
/// sequence is fixed by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n);

    /// Uniform real in [0, 1).
    double unit();

    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent stream seeds from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Default seed, overridable through the CAPFORGE_SEED environment variable.
std::uint64_t default_seed();

} // namespace capforge
