#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ctpe {

// Stable 64-bit mix of (seed, stream) via two splitmix64 rounds; used
// everywhere a derived seed is needed so substream layouts never collide
// across modules.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  for (int round = 0; round < 2; ++round) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
  }
  return z;
}

// Deterministic random stream keyed by (seed, stream index). normal()
// consumes exactly two uniforms (Box-Muller with no cached spare), so the
// draw count per simulation step is fixed and independent of call history;
// this is what makes killed and unkilled paths bit-reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(mix_seed(seed, stream)) {}

  // Uniform on (0, 1]; never returns 0 so logarithms are always finite.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next_raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ctpe
