#pragma once

#include <cmath>
#include <cstdint>

namespace dynperc {

// All randomness in the library flows through the generator below so that a
// (seed, replication) pair fully determines a trajectory, independent of
// platform and standard-library version. std::*_distribution is avoided on
// purpose: its output is implementation-defined.

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

/// SplitMix64 output finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of the RNG stream owned by one replication: output number
/// `replication` of the SplitMix64 sequence started at `base_seed`, i.e.
/// mix64(base_seed + (replication+1)*kGolden64). The map is injective in
/// `replication` for a fixed base, so per-replication seeds are pairwise
/// distinct.
constexpr std::uint64_t replication_seed(std::uint64_t base_seed,
                                         std::uint64_t replication) noexcept {
  return mix64(base_seed + (replication + 1) * kGolden64);
}

/// xoshiro256++ (Blackman & Vigna 2018), seeded through SplitMix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += kGolden64;
      word = mix64(s);
    }
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0,1), 53 random bits.
  double uniform01() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1); never returns an exact endpoint.
  double uniform_open01() noexcept {
    return (double(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Exponential with given rate; strictly positive and finite.
  double exponential(double rate) noexcept {
    return -std::log(uniform_open01()) / rate;
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// Uniform integer in [0, bound) via 128-bit multiply-shift. The bias is
  /// bound/2^64, irrelevant at the bounds used here (<= 2d <= 8).
  std::uint32_t below(std::uint32_t bound) noexcept {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace dynperc
