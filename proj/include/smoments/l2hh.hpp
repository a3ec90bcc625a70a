#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smoments/bit_budget.hpp"
#include "smoments/pairwise_hash.hpp"
#include "smoments/stream.hpp"

namespace smoments {

struct L2hhOptions {
  std::uint32_t rows = 0;            // 0 = derive from delta
  std::uint32_t width = 0;           // 0 = derive from eps
  std::uint32_t max_candidates = 0;  // 0 = derive from eps
};

// l2 heavy hitter sketch: CountSketch rows plus a tracked candidate set.
// At query time every item with f_i^2 >= eps^2 * F2 appears with an estimate
// in (1 +- eps) f_i, with probability at least 1 - delta. Stands in for the
// constant-memory tree-based algorithm behind the same interface.
class L2HeavyHitters {
 public:
  L2HeavyHitters(double eps, double delta, std::uint64_t universe, std::uint64_t seed,
                 L2hhOptions opts = {})
      : eps_(eps), universe_(universe) {
    if (!(eps > 0.0) || eps > 1.0 || !(delta > 0.0) || delta >= 1.0)
      throw std::invalid_argument("L2HeavyHitters: need eps in (0,1], delta in (0,1)");
    width_ = opts.width ? opts.width
                        : static_cast<std::uint32_t>(std::ceil(8.0 / (eps * eps)));
    rows_ = opts.rows ? opts.rows
                      : static_cast<std::uint32_t>(
                            std::ceil(2.0 * std::log2(1.0 / (delta * eps))));
    if (rows_ % 2 == 0) ++rows_;
    max_candidates_ =
        opts.max_candidates
            ? opts.max_candidates
            : static_cast<std::uint32_t>(std::ceil(4.0 / (eps * eps))) + 1;
    cells_.assign(static_cast<std::size_t>(rows_) * width_, 0.0);
    index_.reserve(rows_);
    sign_.reserve(rows_);
    for (std::uint32_t r = 0; r < rows_; ++r) {
      index_.emplace_back(derive_seed(seed, 2 * r), width_);
      sign_.emplace_back(derive_seed(seed, 2 * r + 1));
    }
  }

  void update(ItemId a, double w = 1.0) {
    ++seen_;
    double est = 0.0;
    {
      row_buf_.clear();
      for (std::uint32_t r = 0; r < rows_; ++r) {
        double& cell = cells_[static_cast<std::size_t>(r) * width_ + index_[r](a)];
        cell += sign_[r](a) * w;
        if (std::abs(cell) > max_cell_) max_cell_ = std::abs(cell);
        row_buf_.push_back(sign_[r](a) * cell);
      }
      est = median(row_buf_);
    }
    track(a, est);
  }

  double estimate(ItemId a) const {
    row_buf_.clear();
    for (std::uint32_t r = 0; r < rows_; ++r)
      row_buf_.push_back(sign_[r](a) *
                         cells_[static_cast<std::size_t>(r) * width_ + index_[r](a)]);
    return median(row_buf_);
  }

  // Candidates with fresh estimates, heaviest first, ties by id.
  std::vector<std::pair<ItemId, double>> query() const {
    std::vector<std::pair<ItemId, double>> out;
    out.reserve(candidates_.size());
    for (const auto& [id, e] : candidates_) out.push_back({id, estimate(id)});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return out;
  }

  const std::vector<std::pair<ItemId, double>>& candidates() const {
    return candidates_;
  }

  std::uint64_t updates_seen() const { return seen_; }
  std::uint32_t rows() const { return rows_; }
  std::uint32_t width() const { return width_; }

  // Cells at the width of the largest magnitude seen, candidates at id+count.
  std::uint64_t bits_live() const {
    return static_cast<std::uint64_t>(rows_) * width_ * bits_for_magnitude(max_cell_) +
           candidates_.size() * (bits_for_universe(universe_) + bits_for_magnitude(max_cell_));
  }

  // Precomputed-cell fast path for callers that batch many instances.
  void cells_for(ItemId a, std::uint32_t* idx, float* sgn) const {
    for (std::uint32_t r = 0; r < rows_; ++r) {
      idx[r] = static_cast<std::uint32_t>(static_cast<std::size_t>(r) * width_ + index_[r](a));
      sgn[r] = static_cast<float>(sign_[r](a));
    }
  }

  void update_prehashed(ItemId a, const std::uint32_t* idx, const float* sgn, double w) {
    ++seen_;
    row_buf_.clear();
    for (std::uint32_t r = 0; r < rows_; ++r) {
      double& cell = cells_[idx[r]];
      cell += sgn[r] * w;
      if (std::abs(cell) > max_cell_) max_cell_ = std::abs(cell);
      row_buf_.push_back(sgn[r] * cell);
    }
    track(a, median(row_buf_));
  }

 private:
  // Flat table: max_candidates is small, linear probes beat a node map.
  void track(ItemId a, double est) {
    std::size_t weakest = 0;
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      if (candidates_[i].first == a) {
        candidates_[i].second = est;
        return;
      }
      if (candidates_[i].second < candidates_[weakest].second) weakest = i;
    }
    if (candidates_.size() < max_candidates_) {
      candidates_.push_back({a, est});
    } else if (candidates_[weakest].second < est) {
      candidates_[weakest] = {a, est};
    }
  }

  static double median(std::vector<double>& v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  }

  double eps_;
  std::uint64_t universe_;
  std::uint32_t width_ = 0;
  std::uint32_t rows_ = 0;
  std::uint32_t max_candidates_ = 0;
  std::uint64_t seen_ = 0;
  double max_cell_ = 0.0;
  std::vector<double> cells_;
  std::vector<PairwiseHash> index_;
  std::vector<SignHash> sign_;
  std::vector<std::pair<ItemId, double>> candidates_;
  mutable std::vector<double> row_buf_;
};

// Fixed-footprint variant of the same shape (CountSketch rows + tracked
// candidates) for deployments that keep thousands of instances alive, one
// per (level, repetition). Two rows of twelve counters and a two-slot
// candidate table in one contiguous block; row hashing is seeded mixing.
struct CompactL2hh {
  static constexpr std::uint32_t kRows = 2;
  static constexpr std::uint32_t kWidth = 12;
  static constexpr std::uint32_t kCells = kRows * kWidth;
  static constexpr std::uint32_t kCandidates = 2;

  std::int32_t cells[kCells] = {0};
  std::int32_t cand_est[kCandidates] = {0, 0};
  ItemId cand_id[kCandidates] = {0, 0};
  std::uint64_t seed = 0;
  std::uint32_t consumed = 0;
  bool quota_dead = false;

  struct Slot {
    std::uint8_t cell[kRows];
    std::int8_t sign[kRows];
  };

  Slot slot_for(ItemId a) const {
    Slot s;
    for (std::uint32_t r = 0; r < kRows; ++r) {
      std::uint64_t h = mix64(seed ^ (a * 0x9e3779b97f4a7c15ULL + r));
      s.cell[r] = static_cast<std::uint8_t>(r * kWidth + (h % kWidth));
      s.sign[r] = ((h >> 32) & 1) ? 1 : -1;
    }
    return s;
  }

  void update(ItemId a, const Slot& s) {
    ++consumed;
    cells[s.cell[0]] += s.sign[0];
    cells[s.cell[1]] += s.sign[1];
    // Cheap per-update candidacy from row 0; query() refines with both rows.
    std::int32_t est = s.sign[0] * cells[s.cell[0]];
    if (cand_id[0] == a) {
      cand_est[0] = est;
    } else if (cand_id[1] == a) {
      cand_est[1] = est;
    } else {
      int weakest = cand_est[0] <= cand_est[1] ? 0 : 1;
      if (cand_id[weakest] == 0 || est > cand_est[weakest]) {
        cand_id[weakest] = a;
        cand_est[weakest] = est;
      }
    }
  }

  double estimate(ItemId a) const {
    Slot s = slot_for(a);
    double r0 = s.sign[0] * cells[s.cell[0]];
    double r1 = s.sign[1] * cells[s.cell[1]];
    return 0.5 * (r0 + r1);
  }

  std::uint64_t bits_live(std::uint64_t universe) const {
    std::int64_t max_cell = 1;
    for (std::int32_t c : cells) max_cell = std::max<std::int64_t>(max_cell, std::abs(c));
    return kCells * (bits_for_magnitude(static_cast<double>(max_cell)) + 1) +
           kCandidates * (bits_for_universe(universe) + 32);
  }
};

}  // namespace smoments
