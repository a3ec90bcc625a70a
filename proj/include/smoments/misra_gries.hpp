#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "smoments/bit_budget.hpp"
#include "smoments/stream.hpp"

namespace smoments {

// Deterministic frequent-items summary with ceil(1/c) counter slots. Any item
// with f_i >= c*m is present at query time.
class MisraGries {
 public:
  explicit MisraGries(double threshold) : threshold_(threshold) {
    if (!(threshold > 0.0) || threshold > 1.0)
      throw std::invalid_argument("MisraGries: threshold must be in (0, 1]");
    slots_ = static_cast<std::size_t>(std::ceil(1.0 / threshold));
  }

  void update(ItemId a) {
    ++seen_;
    auto it = table_.find(a);
    if (it != table_.end()) {
      ++it->second;
      return;
    }
    if (table_.size() < slots_) {
      table_.emplace(a, 1);
      return;
    }
    for (auto jt = table_.begin(); jt != table_.end();) {
      if (--jt->second == 0)
        jt = table_.erase(jt);
      else
        ++jt;
    }
  }

  // Sorted for deterministic output.
  std::vector<ItemId> query() const {
    std::vector<ItemId> out;
    out.reserve(table_.size());
    for (const auto& [id, c] : table_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::uint64_t count(ItemId a) const {
    auto it = table_.find(a);
    return it == table_.end() ? 0 : it->second;
  }

  std::uint64_t updates_seen() const { return seen_; }
  std::size_t slots() const { return slots_; }

  std::uint64_t bits_live(std::uint64_t universe) const {
    std::uint64_t max_count = 1;
    for (const auto& [id, c] : table_) max_count = std::max(max_count, c);
    return table_.size() * (bits_for_universe(universe) + bits_for_magnitude(double(max_count)));
  }

 private:
  double threshold_;
  std::size_t slots_;
  std::uint64_t seen_ = 0;
  std::unordered_map<ItemId, std::uint64_t> table_;
};

}  // namespace smoments
