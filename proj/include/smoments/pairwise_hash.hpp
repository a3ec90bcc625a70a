#pragma once

#include <cstdint>
#include <stdexcept>

#include "smoments/rng.hpp"

namespace smoments {

// Carter-Wegman pairwise independent hash h(x) = ((a*x + b) mod P) mod range,
// with P the smallest prime above 2^61. Keys must be below P. The final
// reduction adds bias at most 2*range/P, which stays under 2^-30 for any
// range up to 2^31.
class PairwiseHash {
 public:
  static constexpr std::uint64_t kPrime = 2305843009213693967ULL;  // 2^61 + 15

  PairwiseHash() = default;

  PairwiseHash(std::uint64_t seed, std::uint64_t range) : range_(range) {
    if (range == 0) throw std::invalid_argument("PairwiseHash: range must be nonzero");
    SplitMix64 rng(seed);
    a_ = rng.next_below(kPrime - 1) + 1;  // a in [1, P-1]
    b_ = rng.next_below(kPrime);          // b in [0, P-1]
  }

  // (a*key + b) mod P, uniform over [0, P) and pairwise independent across keys.
  std::uint64_t raw(std::uint64_t key) const {
    using u128 = unsigned __int128;
    u128 v = static_cast<u128>(a_) * key + b_;
    return static_cast<std::uint64_t>(v % kPrime);
  }

  std::uint64_t operator()(std::uint64_t key) const { return raw(key) % range_; }

  // Uniform value in (0, 1], quantized to multiples of 1/P. Never zero.
  double unit(std::uint64_t key) const {
    return (static_cast<double>(raw(key)) + 1.0) / static_cast<double>(kPrime);
  }

  std::uint64_t range() const { return range_; }

 private:
  std::uint64_t a_ = 1;
  std::uint64_t b_ = 0;
  std::uint64_t range_ = 1;
};

// Random +-1 sign derived from an independent pairwise hash.
class SignHash {
 public:
  SignHash() = default;
  explicit SignHash(std::uint64_t seed) : h_(seed, 2) {}

  int operator()(std::uint64_t key) const { return h_(key) == 0 ? -1 : 1; }

 private:
  PairwiseHash h_;
};

}  // namespace smoments
