#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gpobs {

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream, step, index), so evaluation order never changes results.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ull))) {}

  /// Uniform in [0, 1).
  double uniform(std::uint64_t step, std::uint64_t index) const noexcept {
    const std::uint64_t h = mix(mix(key_ ^ step) + index * 0x9E3779B97F4A7C15ull);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t step, std::uint64_t index, double lo, double hi) const noexcept {
    return lo + (hi - lo) * uniform(step, index);
  }

  /// Standard normal via Box-Muller on two counter slots.
  double normal(std::uint64_t step, std::uint64_t index) const noexcept {
    const double u1 = 1.0 - uniform(step, 2 * index);  // (0, 1]
    const double u2 = uniform(step, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

// Stream identifiers shared by the samplers.
namespace streams {
inline constexpr std::uint64_t initial_state = 1;
inline constexpr std::uint64_t process = 2;
inline constexpr std::uint64_t measurement = 3;
inline constexpr std::uint64_t dp_noise = 4;
inline constexpr std::uint64_t adjacency = 5;
inline constexpr std::uint64_t search = 6;
}  // namespace streams

}  // namespace gpobs
