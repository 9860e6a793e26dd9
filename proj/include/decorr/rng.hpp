#pragma once

// Deterministic random numbers.
//
// The generator is xoshiro256** (Blackman & Vigna, 2018) whose 256-bit state
// is filled from the seed by four consecutive SplitMix64 outputs. Uniform
// doubles take the top 53 bits of a 64-bit draw. Gaussian draws use the
// Box-Muller transform on two uniforms. This algorithm is frozen: any change
// invalidates every golden value in the test suite.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "error.hpp"

namespace decorr {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of an independent sub-stream. Used to give each channel (or corpus
/// file) its own generator without depending on draw order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(s);
  return splitmix64(s);
}

/// 64-bit FNV-1a, for deriving sub-streams from names.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi]. Throws when lo > hi.
  double next_uniform(double lo, double hi) {
    if (!(lo <= hi)) fail(ErrorKind::InvalidArgument, "uniform range has lo > hi");
    if (lo == hi) return lo;
    const double v = lo + (hi - lo) * next_unit();
    return v > hi ? hi : v;
  }

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) fail(ErrorKind::InvalidArgument, "integer range has lo > hi");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  /// Standard normal via Box-Muller (one value per call; the pair's second
  /// value is discarded).
  double next_gaussian() noexcept {
    double u1 = next_unit();
    const double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace decorr
