#pragma once

#include <cstdint>
#include <random>

namespace scop {

/// SplitMix64 finalizer applied to z + 0x9E3779B97F4A7C15:
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed for child `index` of `master`: mix64(master ^ mix64(index)).
/// Repetition r of an experiment uses derive_seed(master_seed, r); grid point
/// g of a sweep runs with master seed derive_seed(master_seed, g).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Per-repetition random stream: std::mt19937_64 seeded with one 64-bit
/// value. Every draw consumes exactly one engine output, so stream layout is
/// fixed by the number of variates requested.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// (bits >> 11) * 2^-53, in [0, 1).
    double uniform01();
    double uniform(double lo, double hi);
    /// Standard normal by inverse CDF of ((bits >> 11) + 0.5) * 2^-53.
    double normal();
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace scop
