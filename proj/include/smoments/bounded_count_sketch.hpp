#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "smoments/bit_budget.hpp"
#include "smoments/pairwise_hash.hpp"
#include "smoments/stream.hpp"

namespace smoments {

// CountSketch with width-limited counters. A cell whose magnitude reaches
// 2^cap_bits is marked overflowed and stays that way; a query whose cells are
// overflowed in a majority of rows reports "infinite". Callers are expected
// to have hashed the universe down to a small id space already.
class BoundedCountSketch {
 public:
  BoundedCountSketch(std::uint32_t rows, std::uint32_t width, std::uint32_t cap_bits,
                     std::uint64_t seed)
      : rows_(rows), width_(width), cap_(std::exp2(static_cast<double>(cap_bits))) {
    if (rows == 0 || width == 0 || cap_bits == 0 || cap_bits > 62)
      throw std::invalid_argument("BoundedCountSketch: bad dimensions");
    cells_.assign(static_cast<std::size_t>(rows) * width, 0.0);
    overflow_.assign(cells_.size(), false);
    index_.reserve(rows);
    sign_.reserve(rows);
    for (std::uint32_t r = 0; r < rows; ++r) {
      index_.emplace_back(derive_seed(seed, 2 * r), width);
      sign_.emplace_back(derive_seed(seed, 2 * r + 1));
    }
  }

  // Default cap from the counter-width rule: log2 log2 n + log2(1/eps) + 4.
  static std::uint32_t default_cap_bits(std::uint64_t n, double eps) {
    double ll = std::log2(std::max(2.0, std::log2(static_cast<double>(n))));
    return static_cast<std::uint32_t>(std::ceil(ll + std::log2(1.0 / eps))) + 4;
  }

  void update(std::uint64_t key, double w = 1.0) {
    for (std::uint32_t r = 0; r < rows_; ++r) add_cell(cell_index(r, key), sign_[r](key) * w);
  }

  // nullopt means the capped counters cannot report this key (the infinity
  // marker); otherwise the median of the finite sign-corrected rows.
  std::optional<double> query(std::uint64_t key) const {
    row_buf_.clear();
    std::uint32_t overflowed = 0;
    for (std::uint32_t r = 0; r < rows_; ++r) {
      std::size_t c = cell_index(r, key);
      if (overflow_[c])
        ++overflowed;
      else
        row_buf_.push_back(sign_[r](key) * cells_[c]);
    }
    if (2 * overflowed > rows_) return std::nullopt;
    if (row_buf_.empty()) return std::nullopt;
    auto mid = row_buf_.begin() + static_cast<std::ptrdiff_t>(row_buf_.size() / 2);
    std::nth_element(row_buf_.begin(), mid, row_buf_.end());
    return *mid;
  }

  std::uint32_t rows() const { return rows_; }
  std::uint32_t width() const { return width_; }

  std::uint64_t bits_live() const {
    double max_cell = 1.0;
    for (double c : cells_) max_cell = std::max(max_cell, std::abs(c));
    std::uint64_t per_cell = std::min<std::uint64_t>(bits_for_magnitude(cap_ - 1.0),
                                                     bits_for_magnitude(max_cell)) + 1;
    return cells_.size() * per_cell;
  }

  // Fast path mirrors L2HeavyHitters: callers may precompute cell slots.
  void cells_for(std::uint64_t key, std::uint32_t* idx, float* sgn) const {
    for (std::uint32_t r = 0; r < rows_; ++r) {
      idx[r] = static_cast<std::uint32_t>(cell_index(r, key));
      sgn[r] = static_cast<float>(sign_[r](key));
    }
  }

  void update_prehashed(const std::uint32_t* idx, const float* sgn, double w) {
    for (std::uint32_t r = 0; r < rows_; ++r) add_cell(idx[r], sgn[r] * w);
  }

 private:
  std::size_t cell_index(std::uint32_t r, std::uint64_t key) const {
    return static_cast<std::size_t>(r) * width_ + index_[r](key);
  }

  void add_cell(std::size_t c, double delta) {
    if (overflow_[c]) return;
    cells_[c] += delta;
    if (std::abs(cells_[c]) >= cap_) overflow_[c] = true;
  }

  std::uint32_t rows_;
  std::uint32_t width_;
  double cap_;
  std::vector<double> cells_;
  std::vector<bool> overflow_;
  std::vector<PairwiseHash> index_;
  std::vector<SignHash> sign_;
  mutable std::vector<double> row_buf_;
};

}  // namespace smoments
