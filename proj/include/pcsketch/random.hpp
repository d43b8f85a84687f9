#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pcsketch {

/**
 * Seeded random stream whose draws are identical across standard library
 * implementations: uniforms come from the top 53 bits of mt19937_64 output and
 * normals from Box-Muller over two uniforms (no cached second value).
 */
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  /// [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pcsketch
