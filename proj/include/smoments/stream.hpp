#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smoments/rng.hpp"

namespace smoments {

using ItemId = std::uint64_t;

// Insertion-only stream over the universe [1, n]. n is declared up front.
struct Stream {
  std::uint64_t universe = 0;
  std::vector<ItemId> updates;

  std::size_t length() const { return updates.size(); }
};

struct WeightedUpdate {
  ItemId item;
  double weight;
};

struct WeightedStream {
  std::uint64_t universe = 0;
  std::vector<WeightedUpdate> updates;

  std::size_t length() const { return updates.size(); }

  static WeightedStream from(const Stream& s) {
    WeightedStream w;
    w.universe = s.universe;
    w.updates.reserve(s.updates.size());
    for (ItemId a : s.updates) w.updates.push_back({a, 1.0});
    return w;
  }
};

// Exact per-item counts; the ground-truth oracle for every estimator test.
// Deliberately exempt from bit accounting.
class FrequencyVector {
 public:
  FrequencyVector() = default;

  explicit FrequencyVector(const Stream& s) : universe_(s.universe) {
    for (ItemId a : s.updates) counts_[a] += 1.0;
  }

  explicit FrequencyVector(const WeightedStream& s) : universe_(s.universe) {
    for (const auto& u : s.updates) counts_[u.item] += u.weight;
  }

  double count(ItemId i) const {
    auto it = counts_.find(i);
    return it == counts_.end() ? 0.0 : it->second;
  }

  std::uint64_t universe() const { return universe_; }
  const std::unordered_map<ItemId, double>& counts() const { return counts_; }

  std::size_t distinct() const {
    std::size_t d = 0;
    for (const auto& [id, c] : counts_)
      if (c != 0.0) ++d;
    return d;
  }

  // Sum of f_i^p, with 0^0 read as 0 so p = 0 is the distinct count.
  double moment(double p) const {
    if (p < 0.0) throw std::domain_error("moment: p must be nonnegative");
    double total = 0.0;
    for (const auto& [id, c] : counts_) {
      if (c == 0.0) continue;
      if (c < 0.0 && p != std::floor(p))
        throw std::domain_error("moment: negative frequency with non-integer p");
      if (p == 0.0) {
        total += 1.0;
      } else if (p == 1.0) {
        total += c;
      } else if (p == 2.0) {
        total += c * c;
      } else {
        total += std::pow(c, p);
      }
    }
    return total;
  }

 private:
  std::uint64_t universe_ = 0;
  std::unordered_map<ItemId, double> counts_;
};

inline double exact_moment(const Stream& s, double p) {
  return FrequencyVector(s).moment(p);
}

inline double exact_moment(const WeightedStream& s, double p) {
  return FrequencyVector(s).moment(p);
}

// Positions are 1-based and inclusive, matching the S^{t1:t2} convention.
struct StreamSliceRef {
  const Stream* source = nullptr;
  std::size_t t1 = 0;
  std::size_t t2 = 0;

  std::size_t length() const { return t2 - t1 + 1; }

  Stream materialize() const {
    Stream out;
    out.universe = source->universe;
    out.updates.assign(source->updates.begin() + static_cast<std::ptrdiff_t>(t1 - 1),
                       source->updates.begin() + static_cast<std::ptrdiff_t>(t2));
    return out;
  }
};

inline StreamSliceRef slice(const Stream& s, std::size_t t1, std::size_t t2) {
  if (t1 < 1 || t1 > t2 || t2 > s.updates.size())
    throw std::out_of_range("slice: bounds must satisfy 1 <= t1 <= t2 <= m");
  return StreamSliceRef{&s, t1, t2};
}

// Substream of updates whose item satisfies the predicate; relative order kept.
inline Stream induce(const Stream& s, const std::function<bool(ItemId)>& member) {
  Stream out;
  out.universe = s.universe;
  for (ItemId a : s.updates)
    if (member(a)) out.updates.push_back(a);
  return out;
}

// Fisher-Yates under SplitMix64; same seed gives the same permutation everywhere.
inline Stream shuffle(const Stream& s, std::uint64_t seed) {
  Stream out = s;
  SplitMix64 rng(seed);
  for (std::size_t i = out.updates.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(out.updates[i - 1], out.updates[j]);
  }
  return out;
}

}  // namespace smoments
