#pragma once

#include <complex>
#include <cmath>
#include <cstdint>

namespace fasopt {

/// PCG32: small, portable, seedable generator with independent streams.
/// A (seed, stream) pair fully determines the output sequence on every
/// platform, which is what the scenario determinism contract relies on.
/// Stream-splitting rule used across the project: scenario sampling opens
/// stream k for user k (k = 0..K-1); Monte-Carlo estimators open stream 0
/// of their own seed.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0) {
    inc_ = (stream << 1u) | 1u;
    state_ = 0u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  double normal() { return normal_pair().first; }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0) {
    auto [a, b] = normal_pair();
    double s = std::sqrt(variance / 2.0);
    return {s * a, s * b};
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace fasopt
