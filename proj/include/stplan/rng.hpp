#pragma once

#include <cstdint>

namespace stplan {

/// Stateless counter-based generator: hashes (seed, counter) pairs to 64-bit
/// words with the splitmix64 finalizer. Identical inputs give identical
/// outputs on every platform, which keeps obstacle predictions and optimizer
/// runs byte-reproducible.
inline std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Maps a 64-bit word to a double in [0, 1).
inline double to_unit_double(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

inline double uniform_from_counter(std::uint64_t seed, std::uint64_t counter, double lo, double hi) {
  return lo + (hi - lo) * to_unit_double(hash_counter(seed, counter));
}

/// Small sequential PRNG for the population-based optimizers. xorshift128+
/// core with splitmix64 seeding; avoids std::uniform_real_distribution whose
/// output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    s0_ = hash_counter(seed, 0);
    s1_ = hash_counter(seed, 1);
    if (s0_ == 0 && s1_ == 0) s1_ = 1;
  }

  std::uint64_t next() {
    std::uint64_t x = s0_;
    const std::uint64_t y = s1_;
    s0_ = y;
    x ^= x << 23;
    s1_ = x ^ y ^ (x >> 17) ^ (y >> 26);
    return s1_ + y;
  }

  double uniform() { return to_unit_double(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t s0_ = 0;
  std::uint64_t s1_ = 0;
};

}  // namespace stplan
