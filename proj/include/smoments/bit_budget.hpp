#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smoments {

// Bits needed to store a nonnegative magnitude (1 bit minimum).
inline std::uint64_t bits_for_magnitude(double v) {
  double a = std::abs(v);
  if (a < 1.0) return 1;
  return static_cast<std::uint64_t>(std::floor(std::log2(a))) + 1;
}

inline std::uint64_t bits_for_universe(std::uint64_t n) {
  std::uint64_t b = 0;
  while (n > 0) {
    ++b;
    n >>= 1;
  }
  return b == 0 ? 1 : b;
}

// Per-structure ledger of live and peak bits. Names nest with '/' and a
// parent's figure is the sum of its children plus its own direct entry.
class BitBudget {
 public:
  struct Entry {
    std::uint64_t live = 0;
    std::uint64_t peak = 0;
  };

  void set_live(const std::string& name, std::uint64_t bits) {
    Entry& e = entries_[name];
    e.live = bits;
    if (bits > e.peak) e.peak = bits;
  }

  // Record a structure that is about to be torn down so its peak survives.
  void retire(const std::string& name) {
    auto it = entries_.find(name);
    if (it != entries_.end()) it->second.live = 0;
  }

  std::uint64_t live(const std::string& prefix = "") const {
    return total(prefix, false);
  }
  std::uint64_t peak(const std::string& prefix = "") const {
    return total(prefix, true);
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::uint64_t total(const std::string& prefix, bool want_peak) const {
    std::uint64_t sum = 0;
    for (const auto& [name, e] : entries_) {
      if (!prefix.empty() && name.compare(0, prefix.size(), prefix) != 0) continue;
      sum += want_peak ? e.peak : e.live;
    }
    return sum;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace smoments
