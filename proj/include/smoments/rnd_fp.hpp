#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "smoments/c2fp.hpp"
#include "smoments/turnstile_fp.hpp"

namespace smoments {

// One rotation lane: guess the length by factor-C doubling; the surviving
// estimator instance always saw all but a leading 1/C fraction of the stream.
class RndFpSingle {
 public:
  RndFpSingle(double p, double eps, double delta, std::uint64_t n,
              std::uint64_t seed, const PipelineConfig& cfg = {})
      : p_(p), eps_(eps), delta_(delta), n_(n), seed_(seed), cfg_(cfg) {
    growth_ = cfg.resolve_scale(n, eps, delta);
    a1_ = std::make_unique<C2Fp>(p, eps, delta, n, 1.0, 1.0, derive_seed(seed, 10), cfg);
    a2_ = std::make_unique<C2Fp>(p, eps, delta, n, 1.0, 1.0, derive_seed(seed, 11), cfg);
    const_fp_ = std::make_unique<TurnstileFp>(p, 0.5, 0.05, n, derive_seed(seed, 12));
  }

  void update(ItemId a) {
    a1_->update(a);
    a2_->update(a);
    const_fp_->update(a);
    ++m1_;
    if (static_cast<double>(m1_) >= growth_ * static_cast<double>(m0_)) rotate();
  }

  std::optional<double> query() const { return a1_->query(); }

  std::uint64_t m0() const { return m0_; }
  std::uint64_t m1() const { return m1_; }
  double growth() const { return growth_; }
  std::uint64_t rotations() const { return rotations_; }

  std::uint64_t machinery_consumed() const {
    return a1_->machinery_consumed() + a2_->machinery_consumed();
  }

  std::uint64_t bits_live() const {
    return a1_->bits_live() + a2_->bits_live() + const_fp_->bits_live() + 2 * 64;
  }

 private:
  void rotate() {
    a1_ = std::move(a2_);
    auto g = const_fp_->query();
    g0_ = std::max(1.0, g.value_or(1.0));
    m0_ = m1_;
    a2_ = std::make_unique<C2Fp>(p_, eps_, delta_, n_,
                                 static_cast<double>(m0_), g0_,
                                 derive_seed(seed_, 13 + rotations_), cfg_);
    ++rotations_;
  }

  double p_, eps_, delta_;
  std::uint64_t n_;
  std::uint64_t seed_;
  PipelineConfig cfg_;
  double growth_ = 16.0;
  double g0_ = 1.0;
  std::uint64_t m0_ = 1;
  std::uint64_t m1_ = 0;
  std::uint64_t rotations_ = 0;
  std::unique_ptr<C2Fp> a1_;
  std::unique_ptr<C2Fp> a2_;
  std::unique_ptr<TurnstileFp> const_fp_;
};

// Full estimator: p = 1 is the plain counter; otherwise the median over
// independently seeded copies sharing the one stream pass. Fail surfaces
// only when every copy failed, and is reported, never papered over.
class RndFp {
 public:
  RndFp(double p, double eps, double delta, std::uint64_t n, std::uint64_t seed,
        const PipelineConfig& cfg = {})
      : p_(p) {
    if (!(p > 0.0) || !(p < 2.0))
      throw std::invalid_argument("RndFp: p must lie in (0, 2)");
    if (p == 1.0) return;  // the stream length is the answer
    auto copies = static_cast<std::uint32_t>(
        std::max(1.0, std::ceil(cfg.copies_factor * std::log2(1.0 / delta))));
    copies_.reserve(copies);
    for (std::uint32_t c = 0; c < copies; ++c)
      copies_.push_back(std::make_unique<RndFpSingle>(p, eps, delta, n,
                                                      derive_seed(seed, c), cfg));
  }

  void update(ItemId a) {
    ++length_;
    for (auto& c : copies_) c->update(a);
  }

  std::optional<double> query() const {
    if (p_ == 1.0) return static_cast<double>(length_);
    std::vector<double> answers;
    for (const auto& c : copies_) {
      auto v = c->query();
      if (v) answers.push_back(*v);
    }
    if (answers.empty()) return std::nullopt;
    auto mid = answers.begin() + static_cast<std::ptrdiff_t>(answers.size() / 2);
    std::nth_element(answers.begin(), mid, answers.end());
    return *mid;
  }

  std::size_t copies() const { return copies_.size(); }
  std::uint64_t length() const { return length_; }

  const std::vector<std::unique_ptr<RndFpSingle>>& lanes() const { return copies_; }

  std::uint64_t machinery_consumed() const {
    std::uint64_t c = 0;
    for (const auto& lane : copies_) c = std::max(c, lane->machinery_consumed());
    return c;
  }

  std::uint64_t bits_live() const {
    std::uint64_t b = 64;
    for (const auto& c : copies_) b += c->bits_live();
    return b;
  }

 private:
  double p_;
  std::uint64_t length_ = 0;
  std::vector<std::unique_ptr<RndFpSingle>> copies_;
};

}  // namespace smoments
