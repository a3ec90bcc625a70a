#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "smoments/hhr.hpp"
#include "smoments/levels.hpp"
#include "smoments/p_inverse.hpp"
#include "smoments/pairwise_hash.hpp"
#include "smoments/stream.hpp"

namespace smoments {

struct LargeContConfig {
  double p = 1.0;
  double eps = 0.25;
  std::uint64_t universe = 2;
  std::uint32_t k = 2;
  std::uint32_t gamma = 2;  // hash buckets per level
  LevelParams params;
  double z_mult = 256.0;  // window length z_w = ceil(m_hat * C * z_mult / 2^{w/p})
  std::uint64_t seed = 0;
  double hhr_heaviness = 0.5;
  double hhr_c1 = 4.0;
  double hhr_c3 = 3.0;
  std::uint32_t hhr_keep = 2;
  double hh_eps = 0.25;
  double hh_delta = 0.01;
  L2hhOptions hh_opts{};
};

// Sequential search over levels above w0. For each (level, bucket, rep) cell
// it estimates the induced substream length from a z_w window, runs HHR on
// the induced substream, then counts candidate frequencies over another z_w
// window; surviving values land in a k-slot heap of (1+eps)-quantized keys.
// All phases consume the one stream in order; if the stream ends first the
// caller reads that as Fail.
class LargeContWLen {
 public:
  LargeContWLen(const LargeContConfig& cfg,
                std::shared_ptr<const PInverseSampler> sampler, double m_hat)
      : cfg_(cfg),
        sampler_(std::move(sampler)),
        m_hat_(m_hat),
        bucket_hash_(derive_seed(cfg.seed, 9000), cfg.gamma) {
    level_ = cfg_.params.w0 + 1;
    if (level_ > cfg_.params.w_cutoff) {
      done_ = true;  // no level above w0 can hold any X >= 1
    } else {
      begin_cell();
    }
  }

  void update(ItemId a) {
    if (done_) return;
    ++machinery_consumed_;
    switch (phase_) {
      case Phase::LenEstimate: {
        ++window_seen_;
        if (matches(a)) ++window_hits_;
        if (window_seen_ >= window_len_) start_heavy_phase();
        break;
      }
      case Phase::Heavy: {
        if (matches(a)) hhr_->update(a);
        if (hhr_->done()) start_query_phase();
        break;
      }
      case Phase::QueryFreq: {
        ++window_seen_;
        auto it = counts_.find(a);
        if (it != counts_.end()) ++it->second;
        if (window_seen_ >= window_len_) finish_cell();
        break;
      }
    }
  }

  bool done() const { return done_; }

  // Heap contents as reconstructed values; nullopt while unfinished (Fail).
  std::optional<std::vector<double>> result() const {
    if (!done_) return std::nullopt;
    std::vector<double> out;
    out.reserve(heap_.size());
    for (std::int32_t e : heap_)
      out.push_back(std::pow(1.0 + cfg_.eps, static_cast<double>(e)));
    return out;
  }

  double m_hat() const { return m_hat_; }
  std::uint64_t machinery_consumed() const { return machinery_consumed_; }

  std::uint64_t bits_live() const {
    std::uint64_t b = heap_.size() * 32 + 512;
    if (hhr_) b += hhr_->bits_live();
    b += counts_.size() * (bits_for_universe(cfg_.universe) + 32);
    return b;
  }

 private:
  enum class Phase { LenEstimate, Heavy, QueryFreq };

  bool matches(ItemId a) const {
    if (bucket_hash_(a) + 1 != bucket_) return false;
    double x = sampler_->sample(a, rep_);
    auto w = level_of(cfg_.params, x);
    return w && *w == level_;
  }

  std::uint64_t window_for_level(std::uint32_t w) const {
    double z = m_hat_ * cfg_.params.scale_c * cfg_.z_mult /
               std::exp2(static_cast<double>(w) / cfg_.p);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(z)));
  }

  void begin_cell() {
    phase_ = Phase::LenEstimate;
    window_len_ = window_for_level(level_);
    window_seen_ = 0;
    window_hits_ = 0;
  }

  void start_heavy_phase() {
    double est_len = std::max(
        1.0, static_cast<double>(window_hits_) * m_hat_ / static_cast<double>(window_len_));
    HhrConfig hc;
    hc.p = cfg_.p;
    hc.heaviness = cfg_.hhr_heaviness;
    hc.m_hat = est_len;
    hc.f_prior = std::max(1.0, std::exp2(static_cast<double>(level_)) /
                                   std::pow(cfg_.params.scale_c, cfg_.p));
    hc.universe = cfg_.universe;
    hc.seed = derive_seed(cfg_.seed, (static_cast<std::uint64_t>(level_) << 32) ^
                                         (bucket_ << 16) ^ rep_);
    hc.c1 = cfg_.hhr_c1;
    hc.c2 = cfg_.hhr_heaviness / 2.0;
    hc.c3 = cfg_.hhr_c3;
    hc.trunk_keep = cfg_.hhr_keep;
    hc.hh_eps = cfg_.hh_eps;
    hc.hh_delta = cfg_.hh_delta;
    hc.hh_opts = cfg_.hh_opts;
    hhr_ = std::make_unique<Hhr>(hc);
    phase_ = Phase::Heavy;
  }

  // The z_w query window is consumed even when HHR surfaced no candidates;
  // the stream pointer always advances by whole windows.
  void start_query_phase() {
    counts_.clear();
    for (ItemId id : hhr_->result()) counts_.emplace(id, 0);
    hhr_.reset();
    window_len_ = window_for_level(level_);
    window_seen_ = 0;
    phase_ = Phase::QueryFreq;
  }

  void finish_cell() {
    for (const auto& [id, cnt] : counts_) {
      if (cnt == 0) continue;
      double f_est = static_cast<double>(cnt) * m_hat_ / static_cast<double>(window_len_);
      double value = sampler_->sample(id, rep_) * f_est;
      push_heap_value(static_cast<std::int32_t>(
          std::floor(std::log(value) / std::log(1.0 + cfg_.eps))));
    }
    counts_.clear();
    advance_cell();
  }

  void push_heap_value(std::int32_t e) {
    if (heap_.size() < cfg_.k) {
      heap_.push_back(e);
      std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
      return;
    }
    if (e > heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end(), std::greater<>());
      heap_.back() = e;
      std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
    }
  }

  void advance_cell() {
    if (++rep_ <= cfg_.k) {
      begin_cell();
      return;
    }
    rep_ = 1;
    if (++bucket_ <= cfg_.gamma) {
      begin_cell();
      return;
    }
    bucket_ = 1;
    if (++level_ <= cfg_.params.w_cutoff) {
      begin_cell();
      return;
    }
    done_ = true;
  }

  LargeContConfig cfg_;
  std::shared_ptr<const PInverseSampler> sampler_;
  double m_hat_;
  PairwiseHash bucket_hash_;

  bool done_ = false;
  Phase phase_ = Phase::LenEstimate;
  std::uint32_t level_ = 1;
  std::uint64_t bucket_ = 1;
  std::uint32_t rep_ = 1;
  std::uint64_t window_len_ = 1;
  std::uint64_t window_seen_ = 0;
  std::uint64_t window_hits_ = 0;
  std::unique_ptr<Hhr> hhr_;
  std::unordered_map<ItemId, std::uint64_t> counts_;
  std::vector<std::int32_t> heap_;  // min-heap of quantized exponents
  std::uint64_t machinery_consumed_ = 0;
};

// Doubling length-guess wrapper: two instances a factor two apart, so at the
// end of the stream the surviving one always ran with a usable prior.
class LargeCont {
 public:
  LargeCont(const LargeContConfig& cfg, std::shared_ptr<const PInverseSampler> sampler)
      : cfg_(cfg), sampler_(std::move(sampler)) {
    a1_ = std::make_unique<LargeContWLen>(cfg_, sampler_, 2.0);
    a2_ = std::make_unique<LargeContWLen>(cfg_, sampler_, 2.0);
    m_hat_ = 2;
  }

  void update(ItemId a) {
    a1_->update(a);
    a2_->update(a);
    ++seen_;
    if (2 * m_hat_ <= seen_) {
      retired_consumed_ += a1_->machinery_consumed();
      a1_ = std::move(a2_);
      m_hat_ = seen_;
      a2_ = std::make_unique<LargeContWLen>(cfg_, sampler_, static_cast<double>(m_hat_));
      ++rotations_;
    }
  }

  // A1's answer; fall back to A2 so Fail needs both unfinished.
  std::optional<std::vector<double>> query() const {
    auto r = a1_->result();
    if (r) return r;
    return a2_->result();
  }

  double a1_m_hat() const { return a1_->m_hat(); }
  std::uint64_t rotations() const { return rotations_; }
  std::uint64_t updates_seen() const { return seen_; }

  std::uint64_t machinery_consumed() const {
    return retired_consumed_ + a1_->machinery_consumed() + a2_->machinery_consumed();
  }

  std::uint64_t bits_live() const { return a1_->bits_live() + a2_->bits_live() + 128; }

 private:
  LargeContConfig cfg_;
  std::shared_ptr<const PInverseSampler> sampler_;
  std::unique_ptr<LargeContWLen> a1_;
  std::unique_ptr<LargeContWLen> a2_;
  std::uint64_t m_hat_ = 2;
  std::uint64_t seen_ = 0;
  std::uint64_t rotations_ = 0;
  std::uint64_t retired_consumed_ = 0;
};

}  // namespace smoments
