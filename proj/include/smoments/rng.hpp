#pragma once

#include <cstdint>

namespace smoments {

// Fixed, portable generator used everywhere a seeded shuffle or sample is
// needed. SplitMix64 has a full 2^64 period per stream and identical output
// on every platform, so seeded runs are bit-reproducible.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased value in [0, bound) by rejection. bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in (0, 1]: (r + 1) / 2^64, never returns 0.
  double next_unit() {
    return (static_cast<double>(next() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  }

 private:
  std::uint64_t state_;
};

// Stateless mix of the same quality, for deriving sub-seeds from a master
// seed without sharing generator state.
inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t lane) {
  return mix64(master + 0x9e3779b97f4a7c15ULL * (lane + 1));
}

}  // namespace smoments
