#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "smoments/bit_budget.hpp"
#include "smoments/cursor.hpp"
#include "smoments/rnd_fp.hpp"
#include "smoments/stream.hpp"

namespace smoments {

// Bits harvested from first-arrival parities of low-count items in a
// random-order prefix. The only admissible seed source in this module.
class ExtractedBits {
 public:
  explicit ExtractedBits(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  // Value of the bit string as an integer modulo `mod` (MSB first).
  std::uint64_t mod_value(std::uint64_t mod) const {
    std::uint64_t v = 0;
    for (std::uint8_t b : bits_) v = (v * 2 + b) % mod;
    return v;
  }

  // Deterministic expansion of the harvested bits into 64-bit lane seeds.
  std::uint64_t seed(std::uint64_t lane) const {
    std::uint64_t acc = 0x517cc1b727220a95ULL;
    std::uint64_t word = 0;
    int fill = 0;
    for (std::uint8_t b : bits_) {
      word = (word << 1) | b;
      if (++fill == 64) {
        acc = mix64(acc ^ word);
        word = 0;
        fill = 0;
      }
    }
    if (fill) acc = mix64(acc ^ (word << (64 - fill)));
    return mix64(acc + 0x9e3779b97f4a7c15ULL * (lane + 1));
  }

 private:
  std::vector<std::uint8_t> bits_;
};

struct LedgerEntry {
  std::uint64_t count = 0;
  std::uint64_t first_pos = 0;  // 1-based arrival position
};

// take_count smallest-count items (ties by id), re-sorted by id; one bit per
// item, the parity of its first arrival position.
inline ExtractedBits extract_bits(
    const std::vector<std::pair<ItemId, LedgerEntry>>& items, std::size_t take_count) {
  if (take_count == 0 || items.size() < take_count)
    throw std::runtime_error("extract_bits: prefix holds too few items");
  std::vector<std::pair<ItemId, LedgerEntry>> sorted = items;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count < b.second.count;
    return a.first < b.first;
  });
  sorted.resize(take_count);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::uint8_t> bits;
  bits.reserve(take_count);
  for (const auto& [id, e] : sorted)
    bits.push_back(static_cast<std::uint8_t>(e.first_pos % 2));
  return ExtractedBits(std::move(bits));
}

// Primes in [p0, 2 p0] by plain sieve.
inline std::vector<std::uint64_t> prime_sieve_band(std::uint64_t p0) {
  std::uint64_t hi = 2 * p0;
  std::vector<bool> composite(hi + 1, false);
  std::vector<std::uint64_t> primes;
  for (std::uint64_t i = 2; i <= hi; ++i) {
    if (composite[i]) continue;
    if (i >= p0) primes.push_back(i);
    for (std::uint64_t j = i * i; j <= hi; j += i) composite[j] = true;
  }
  return primes;
}

// q = the (bits mod #primes)-th prime of the band. Needs enough bits that the
// modular reduction is nearly uniform over the band.
inline std::uint64_t sample_prime(const ExtractedBits& bits,
                                  const std::vector<std::uint64_t>& band) {
  if (band.empty()) throw std::runtime_error("sample_prime: empty band");
  std::size_t needed = bits_for_universe(band.size() - 1);
  if (bits.size() < needed)
    throw std::runtime_error("sample_prime: not enough extracted bits");
  return band[bits.mod_value(band.size())];
}

struct DerandConfig {
  double s_factor = 4.0;          // catalog target multiplier
  double extract_fraction = 0.0;  // 0 = delta/100 (the asymptotic rule)
  double r_factor = 4.0;          // |R| = ceil(r_factor * log2(n) / delta)
  double prime_band_cap = 4e6;    // sieve size guard
  std::uint64_t seed_bits = 128;  // second-extraction target
  PipelineConfig pipeline;
};

// Single-pass deterministic estimator. Phase 1 catalogs a prefix exactly and
// turns first-arrival parities into a prime for id compression; phase 2
// tracks further items at doubling horizons and extracts the seed bits;
// phase 3 runs the seeded randomized estimator on the suffix, with the
// prefix-tracked moment arbitrating which answer stands. No internal
// randomness anywhere: every seed traces back to the ledger.
class DeterministicFp {
 public:
  DeterministicFp(double p, double eps, double delta, std::uint64_t n,
                  DerandConfig cfg = {})
      : p_(p), eps_(eps), delta_(delta), n_(n), cfg_(cfg) {
    if (!(p > 0.0) || !(p < 2.0))
      throw std::invalid_argument("DeterministicFp: p must lie in (0, 2)");
    double lg = std::log2(static_cast<double>(n < 4 ? 4 : n));
    double ll = std::log2(std::max(2.0, lg));
    double fraction = cfg_.extract_fraction > 0 ? cfg_.extract_fraction : delta / 100.0;

    double p0 = std::min(cfg_.prime_band_cap / 2.0, std::pow(lg / delta, 3.0));
    band_ = prime_sieve_band(static_cast<std::uint64_t>(std::max(64.0, p0)));
    prime_bits_ = bits_for_universe(band_.size() - 1) + 4;

    auto s_target = static_cast<std::size_t>(std::ceil(cfg_.s_factor * (ll + std::log2(1.0 / delta))));
    catalog_target_ = std::max<std::size_t>(
        s_target,
        static_cast<std::size_t>(std::ceil(static_cast<double>(prime_bits_) / fraction)));
    r_target_ = static_cast<std::size_t>(std::ceil(cfg_.r_factor * lg / delta));
    seed_take_ = static_cast<std::size_t>(
        std::ceil(std::min(static_cast<double>(cfg_.seed_bits),
                           fraction * static_cast<double>(r_target_))));
    if (seed_take_ == 0) seed_take_ = 1;
    snapshot_threshold_ = static_cast<std::uint64_t>(std::ceil((lg / eps) * (lg / eps)));
  }

  void update(ItemId a) {
    ++pos_;
    switch (phase_) {
      case Phase::Catalog: {
        auto [it, fresh] = catalog_.try_emplace(a, LedgerEntry{0, pos_});
        it->second.count += 1;
        if (fresh && catalog_.size() == catalog_target_) finish_catalog();
        break;
      }
      case Phase::Collect: {
        auto c = catalog_.find(a);
        if (c != catalog_.end()) {
          c->second.count += 1;
        } else if (auto r = r_items_.find(a); r != r_items_.end()) {
          bump_r(r->second);
        } else {
          RItem item;
          item.first_pos = pos_;
          item.count = 1;
          r_items_.emplace(a, item);
        }
        tick_horizons();
        if (r_items_.size() == r_target_) finish_collect();
        break;
      }
      case Phase::Estimate: {
        auto c = catalog_.find(a);
        if (c != catalog_.end()) c->second.count += 1;
        if (auto r = r_items_.find(a); r != r_items_.end()) bump_r(r->second);
        tick_horizons();
        inner_->update(a);
        break;
      }
    }
  }

  // Final answer; deterministic given the update sequence.
  double finalize() const {
    if (phase_ != Phase::Estimate) return tracked_moment();
    double tracked_now = tracked_moment();
    bool suffix_grew = tracked_now >= handoff_moment_ / eps_;
    if (suffix_grew) {
      auto v = inner_->query();
      if (v) return *v;
    }
    return tracked_now;
  }

  std::uint64_t prime() const { return prime_q_; }
  std::uint64_t handoff_position() const { return handoff_pos_; }
  bool reached_estimate_phase() const { return phase_ == Phase::Estimate; }
  std::size_t catalog_size() const { return catalog_.size(); }
  std::size_t r_size() const { return r_items_.size(); }
  std::uint64_t snapshot_threshold() const { return snapshot_threshold_; }

  // Ledger state at the accounted widths: catalog ids and exact counts, R
  // ids at log q bits with horizon index and threshold-capped count.
  std::uint64_t bits_ledger() const {
    std::uint64_t id_bits = bits_for_universe(n_);
    std::uint64_t cnt_bits = bits_for_magnitude(static_cast<double>(pos_ + 1));
    std::uint64_t q_bits = bits_for_universe(prime_q_ ? prime_q_ : band_.back());
    std::uint64_t thr_bits = bits_for_magnitude(static_cast<double>(snapshot_threshold_)) + 1;
    return catalog_.size() * (id_bits + cnt_bits + 1) +
           r_items_.size() * (q_bits + 6 + thr_bits + 1);
  }

  std::uint64_t bits_live() const {
    return bits_ledger() + (inner_ ? inner_->bits_live() : 0);
  }

  // Horizon snapshot view for tests: (horizon index, count at horizon).
  std::optional<std::pair<std::uint32_t, std::uint64_t>> snapshot_of(ItemId a) const {
    auto it = r_items_.find(a);
    if (it == r_items_.end() || it->second.snap_horizon == 0) return std::nullopt;
    return std::make_pair(it->second.snap_horizon, it->second.snap_count);
  }

 private:
  enum class Phase { Catalog, Collect, Estimate };

  struct RItem {
    std::uint64_t first_pos = 0;
    std::uint64_t count = 0;
    std::uint32_t snap_horizon = 0;  // largest i with count under threshold at g_i
    std::uint64_t snap_count = 0;
    bool frozen = false;  // crossed the threshold; snapshot no longer moves
  };

  void finish_catalog() {
    s1_ = pos_;
    std::vector<std::pair<ItemId, LedgerEntry>> items(catalog_.begin(), catalog_.end());
    auto bits = extract_bits(items, std::min<std::size_t>(prime_bits_, items.size()));
    prime_q_ = sample_prime(bits, band_);
    next_horizon_ = 1;
    horizon_index_ = 1;
    phase_ = Phase::Collect;
  }

  void bump_r(RItem& item) {
    item.count += 1;
    if (!item.frozen && item.count > snapshot_threshold_) item.frozen = true;
  }

  void tick_horizons() {
    // g_i = 2^{i-1} positions past s1.
    while (pos_ - s1_ >= next_horizon_) {
      for (auto& [id, item] : r_items_) {
        if (item.frozen) continue;
        item.snap_horizon = horizon_index_;
        item.snap_count = item.count;
      }
      next_horizon_ *= 2;
      ++horizon_index_;
    }
  }

  void finish_collect() {
    std::vector<std::pair<ItemId, LedgerEntry>> items;
    items.reserve(r_items_.size());
    for (const auto& [id, item] : r_items_)
      items.push_back({id, LedgerEntry{item.count, item.first_pos}});
    auto bits = extract_bits(items, std::min(seed_take_, items.size()));
    handoff_pos_ = pos_;
    inner_ = std::make_unique<RndFp>(p_, eps_, delta_, n_, bits.seed(0), cfg_.pipeline);
    handoff_moment_ = tracked_moment();
    phase_ = Phase::Estimate;
  }

  double tracked_moment() const {
    double total = 0.0;
    for (const auto& [id, e] : catalog_)
      if (e.count > 0) total += std::pow(static_cast<double>(e.count), p_);
    double elapsed = static_cast<double>(pos_ > s1_ ? pos_ - s1_ : 1);
    for (const auto& [id, item] : r_items_) {
      double est;
      if (!item.frozen) {
        est = static_cast<double>(item.count);
      } else if (item.snap_horizon > 0) {
        double g = std::exp2(static_cast<double>(item.snap_horizon - 1));
        est = static_cast<double>(item.snap_count) * elapsed / g;
      } else {
        est = static_cast<double>(snapshot_threshold_);
      }
      if (est > 0) total += std::pow(est, p_);
    }
    return total;
  }

  double p_, eps_, delta_;
  std::uint64_t n_;
  DerandConfig cfg_;

  std::vector<std::uint64_t> band_;
  std::size_t prime_bits_ = 8;
  std::size_t catalog_target_ = 8;
  std::size_t r_target_ = 8;
  std::size_t seed_take_ = 8;
  std::uint64_t snapshot_threshold_ = 16;

  Phase phase_ = Phase::Catalog;
  std::uint64_t pos_ = 0;
  std::uint64_t s1_ = 0;
  std::uint64_t next_horizon_ = 1;
  std::uint32_t horizon_index_ = 1;
  std::uint64_t prime_q_ = 0;
  std::uint64_t handoff_pos_ = 0;
  double handoff_moment_ = 0.0;
  std::unordered_map<ItemId, LedgerEntry> catalog_;
  std::unordered_map<ItemId, RItem> r_items_;
  std::unique_ptr<RndFp> inner_;
};

inline double deterministic_fp(double p, double eps, double delta, std::uint64_t n,
                               StreamCursor& cursor, DerandConfig cfg = {}) {
  DeterministicFp est(p, eps, delta, n, cfg);
  while (auto a = cursor.next()) est.update(*a);
  return est.finalize();
}

}  // namespace smoments
