#pragma once

#include <cmath>
#include <cstdint>

namespace qkd {

// SplitMix64 finalizer (Steele, Lea & Flood, "Fast splittable pseudorandom
// number generators", OOPSLA 2014). Used here in counter mode: every stream is
// keyed independently by (seed, stream), so Monte Carlo round i can own stream
// i and the results do not depend on how rounds are sharded across workers.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(splitmix64_mix(splitmix64_mix(seed + kGamma) ^
                              splitmix64_mix(stream * kGamma + 1))) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return splitmix64_mix(state_);
  }

  // Uniform in [0, 1), 53-bit mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  int next_bit() { return static_cast<int>(next_u64() >> 63); }

  // Standard normal via Box-Muller. Two uniforms per call; plenty for the
  // cold paths (Haar sampling) that need it.
  double next_normal() {
    const double u = next_double_open();
    const double v = next_double();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  std::uint64_t state_;
};

}  // namespace qkd
