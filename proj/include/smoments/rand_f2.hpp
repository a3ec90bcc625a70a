#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smoments/bit_budget.hpp"
#include "smoments/stream.hpp"

namespace smoments {

// b = ceil(c_b * max(1/(eps^2 log2 n), 2) * log2(1/delta)).
inline std::size_t choose_block_size(double eps, double delta, std::uint64_t n,
                                     double cb = 8.0) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) || n < 2)
    throw std::invalid_argument("choose_block_size: need eps, delta in (0,1), n >= 2");
  double lg = std::log2(static_cast<double>(n));
  double b = cb * std::max(1.0 / (eps * eps * lg), 2.0) * std::log2(1.0 / delta);
  return static_cast<std::size_t>(std::ceil(b));
}

// Block-pair second-moment estimator for random order streams. Buffers one
// block at a time, counts same-item pairs inside each completed block exactly,
// and discards the trailing partial block.
class RandF2 {
 public:
  RandF2(std::size_t block_size, std::uint64_t universe)
      : block_size_(block_size), universe_(universe) {
    if (block_size < 2) throw std::invalid_argument("RandF2: block size must be >= 2");
    buffer_.reserve(block_size);
  }

  void update(ItemId a) {
    buffer_.push_back(a);
    ++seen_;
    if (buffer_.size() == block_size_) flush_block();
  }

  // Y = 2K(m^2 - m) / ((b^2 - b) T) + m, over the completed blocks only.
  double estimate() const {
    if (blocks_ == 0)
      throw std::runtime_error("RandF2: no complete block, stream too short");
    double m = static_cast<double>(seen_);
    double b = static_cast<double>(block_size_);
    double k = static_cast<double>(pairs_);
    return 2.0 * k * (m * m - m) / ((b * b - b) * static_cast<double>(blocks_)) + m;
  }

  std::uint64_t updates_seen() const { return seen_; }
  std::uint64_t complete_blocks() const { return blocks_; }

  // Live state: the block buffer at id width plus the fixed registers.
  std::uint64_t bits_live() const {
    return buffer_.size() * bits_for_universe(universe_) + 256;
  }

  std::uint64_t bits_peak() const {
    return block_size_ * bits_for_universe(universe_) + 256;
  }

 private:
  void flush_block() {
    std::sort(buffer_.begin(), buffer_.end());
    std::size_t run = 1;
    for (std::size_t i = 1; i <= buffer_.size(); ++i) {
      if (i < buffer_.size() && buffer_[i] == buffer_[i - 1]) {
        ++run;
      } else {
        pairs_ += static_cast<unsigned __int128>(run) * (run - 1) / 2;
        run = 1;
      }
    }
    buffer_.clear();
    ++blocks_;
  }

  std::size_t block_size_;
  std::uint64_t universe_;
  std::vector<ItemId> buffer_;
  unsigned __int128 pairs_ = 0;  // K; 128 bits so m up to 2^40 cannot overflow
  std::uint64_t blocks_ = 0;     // T
  std::uint64_t seen_ = 0;       // m
};

inline double rand_f2_run(const Stream& s, std::size_t block_size) {
  RandF2 st(block_size, s.universe);
  for (ItemId a : s.updates) st.update(a);
  return st.estimate();
}

}  // namespace smoments
