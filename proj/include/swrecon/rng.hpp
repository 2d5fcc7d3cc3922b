#pragma once

#include <cstdint>
#include <random>

namespace swrecon {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mix a base seed with stream tags; used to derive independent child
/// generators (per piece, per step, per worker) from one global seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(b + 0x51ed2701ULL));
}

/// Seeded generator producing doubles with a fixed bit-level recipe, so
/// sequences are identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    static Rng child(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        return Rng(derive_seed(seed, a, b));
    }

    std::uint64_t bits() { return eng_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    /// Standard normal via inverse-CDF transform (deterministic, no state
    /// carried between calls like Box-Muller pairs).
    double normal();

  private:
    std::mt19937_64 eng_;
};

/// Inverse of the standard normal CDF. Rational approximation refined with
/// one Halley step; accurate to ~1e-15 over (0, 1).
double normal_quantile(double u);

/// Standard normal CDF via erf.
double normal_cdf(double z);

}  // namespace swrecon
