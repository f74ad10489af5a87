#include "scop/rng.hpp"

#include <boost/math/distributions/normal.hpp>

namespace scop {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(master ^ mix64(index));
}

double RandomStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RandomStream::normal() {
    static const boost::math::normal_distribution<double> standard;
    const double p = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return boost::math::quantile(standard, p);
}

} // namespace scop
