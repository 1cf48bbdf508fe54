#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "flowsmooth/core.hpp"

namespace flowsmooth {

// Counter-based generator built on the SplitMix64 finalizer.
//
//   key      = mix(seed ^ mix(stream))
//   output_n = mix(key + n * 0x9E3779B97F4A7C15)     n = 0, 1, 2, ...
//
// where mix(x) is the SplitMix64 output function applied to x + golden.
// Each stream (one per ensemble member) is independent of every other, so
// adding consumers never shifts an existing stream.
//
// Uniforms take the top 53 bits: u = (output >> 11) * 2^-53 in [0, 1).
// Normals use Box-Muller on (1 - u1, u2), emitting r cos(theta) then
// r sin(theta) from the same pair.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream))) {}

  static constexpr std::uint64_t mix(std::uint64_t x) {
    std::uint64_t z = x + kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(key_ + counter_++ * kGolden); }

  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_normal() {
    if (spare_) {
      const double out = *spare_;
      spare_.reset();
      return out;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

// z ~ N(0, I) drawn from stream `member` of `seed`.
inline StateVector sample_standard_normal(std::uint64_t seed, std::uint64_t member, std::size_t dim) {
  CounterRng rng(seed, member);
  std::vector<double> z(dim);
  for (double& x : z) x = rng.next_normal();
  return StateVector(std::move(z));
}

}  // namespace flowsmooth
