#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smoments/pairwise_hash.hpp"
#include "smoments/stream.hpp"

namespace smoments {

// Inverse CDF of the p-inverse law: X = floor(u^{-1/p}) for u in (0, 1].
inline double p_inverse_from_unit(double u, double p) {
  return std::floor(std::pow(u, -1.0 / p));
}

// Pairwise independent p-inverse scalings X_i^{(r)}: P[X >= x] = x^{-p} for
// integer x >= 1. Values are derived on demand from one pairwise hash over
// the combined (item, repetition) key space; nothing is materialized per
// universe item. Requires n * k < PairwiseHash::kPrime.
class PInverseSampler {
 public:
  PInverseSampler() = default;

  PInverseSampler(double p, std::uint32_t k, std::uint64_t n, std::uint64_t seed)
      : p_(p), k_(k), n_(n), hash_(seed, 2) {
    if (!(p > 0.0) || !(p < 2.0))
      throw std::invalid_argument("PInverseSampler: p must lie in (0, 2)");
    if (k == 0) throw std::invalid_argument("PInverseSampler: k must be positive");
    using u128 = unsigned __int128;
    if (static_cast<u128>(n) * k >= PairwiseHash::kPrime)
      throw std::invalid_argument("PInverseSampler: n * k exceeds key space");
  }

  double p() const { return p_; }
  std::uint32_t repetitions() const { return k_; }

  // X = floor(u^{-1/p}) with u the pairwise-uniform value of key (i, r).
  // Integral and >= 1; exact up to 2^53, approximate (and enormous) beyond.
  double sample(ItemId i, std::uint32_t r) const {
    return p_inverse_from_unit(unit(i, r), p_);
  }

  // Uniform in (0, 1] for key (i, r); bias below 2^-61 per sample.
  double unit(ItemId i, std::uint32_t r) const {
    if (r < 1 || r > k_) throw std::out_of_range("PInverseSampler: repetition index");
    std::uint64_t key = static_cast<std::uint64_t>(r - 1) * n_ + (i - 1);
    return hash_.unit(key);
  }

  // The p-ST expansion of one update: ((a, r), X_a^{(r)}) for r = 1..k.
  // A functional view; the expanded stream is never buffered.
  std::vector<std::pair<std::pair<ItemId, std::uint32_t>, double>> expand(ItemId a) const {
    std::vector<std::pair<std::pair<ItemId, std::uint32_t>, double>> out;
    out.reserve(k_);
    for (std::uint32_t r = 1; r <= k_; ++r) out.push_back({{a, r}, sample(a, r)});
    return out;
  }

 private:
  double p_ = 1.0;
  std::uint32_t k_ = 0;
  std::uint64_t n_ = 0;
  PairwiseHash hash_;
};

// Smallest even k meeting the quantile lemma's constant: k >= 160 / (p^2 eps^2).
inline std::uint32_t quantile_repetitions(double p, double eps) {
  double need = 160.0 / (p * p * eps * eps);
  auto k = static_cast<std::uint64_t>(std::ceil(need));
  if (k % 2 == 1) ++k;
  return static_cast<std::uint32_t>(k);
}

}  // namespace smoments
