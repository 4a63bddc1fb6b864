#pragma once

#include <cmath>
#include <cstdint>

namespace wellprobe {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over <random> engines because
// the output sequence is pinned by the algorithm itself, not by the standard
// library implementation, which keeps ensemble runs bit-reproducible. Normal
// deviates are produced with an explicit Box-Muller transform for the same
// reason: std::normal_distribution is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in (0, 1]: never returns 0, so log() below is safe.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Draws two uniforms per pair of normals.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer as a standalone 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Child seed for run `k` of a master seed. Runs of one ensemble share the
/// master seed and differ only in k, so child streams are decorrelated and
/// independent of execution order.
inline std::uint64_t child_seed(std::uint64_t master_seed, std::uint64_t k) {
  return mix64(master_seed ^ mix64(k + 0x9E3779B97F4A7C15ull));
}

}  // namespace wellprobe
