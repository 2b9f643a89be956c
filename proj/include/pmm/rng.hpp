#pragma once
// Reproducible random streams. Sweep points and trials get statistically
// independent substreams derived from (master_seed, point_index, trial_index)
// by counter-style hashing, so scheduling order never changes results and the
// same triple yields the same draws on every platform. The std::<random>
// distributions are implementation-defined, hence the hand-rolled Box-Muller.

#include <cmath>
#include <complex>
#include <cstdint>

namespace pmm {

namespace detail {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  return splitmix64_mix(state);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// xoshiro256++ seeded through splitmix64.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = detail::splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Low `count` bits of one draw (count <= 64).
  std::uint64_t bits(int count) {
    const std::uint64_t w = next_u64();
    return count >= 64 ? w : (w & ((1ull << count) - 1ull));
  }

  // Standard circularly-symmetric complex Gaussian: zero mean, E|z|^2 = 1
  // (each real part has variance 1/2). Box-Muller, two uniforms per draw.
  std::complex<double> complex_gaussian() {
    const double radius = std::sqrt(-std::log(uniform_pos()));
    const double angle = 2.0 * M_PI * uniform();
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  // Real N(0,1).
  double gaussian() {
    const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double angle = 2.0 * M_PI * uniform();
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t s_[4];
};

// Substream for one (point, trial) cell of a sweep. (seed, 0, 0) is the
// canonical regression stream.
inline RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t point_index,
                                  std::uint64_t trial_index) {
  std::uint64_t h = detail::splitmix64_mix(master_seed + 0x9E3779B97F4A7C15ull);
  h = detail::splitmix64_mix(h ^ detail::splitmix64_mix(point_index + 0xBF58476D1CE4E5B9ull));
  h = detail::splitmix64_mix(h ^ detail::splitmix64_mix(trial_index + 0x94D049BB133111EBull));
  return RandomStream(h);
}

}  // namespace pmm
