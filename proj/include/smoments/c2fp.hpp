#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>

#include "smoments/large_cont.hpp"
#include "smoments/levels.hpp"
#include "smoments/p_inverse.hpp"
#include "smoments/quantile.hpp"
#include "smoments/small_approx.hpp"
#include "smoments/small_cont.hpp"

namespace smoments {

// Every unnamed constant in the pipeline, with its default. Zeros mean
// "derive from (p, eps, n, delta)".
struct PipelineConfig {
  std::uint32_t k = 0;         // repetitions; 0 = quantile lemma constant
  std::uint32_t gamma = 0;     // level buckets; 0 = k
  double scale_c = 0.0;        // C; 0 = max(16, log2(n/delta) / eps^2)
  double d0 = 4.0;             // critical level multiplier
  double z_mult_factor = 16.0; // window factor; z multiplier is factor / eps^2
  double small_cap_factor = 1.0;
  double quota_factor = 8.0;
  std::uint32_t cs_rows = 3;
  double cs_width_factor = 3.0;
  std::uint32_t cs_width_cap = 8192;
  double hhr_heaviness = 0.5;
  double hhr_c1 = 4.0;
  double hhr_c3 = 3.0;
  std::uint32_t hhr_keep = 2;
  L2hhOptions hhr_detector{};
  double hh_eps = 0.25;
  double hh_delta = 0.01;
  bool collision_audit = false;
  double copies_factor = 0.9;  // parallel copies = ceil(factor * log2(1/delta))
  std::size_t profile_cache_cap = 1u << 16;

  std::uint32_t resolve_k(double p, double eps) const {
    if (k) return k;
    return quantile_repetitions(p, eps);
  }

  // The growth factor doubles as the level anchor constant. Kept small
  // enough that rotations flush the startup priors on bench-size streams.
  double resolve_scale(std::uint64_t n, double eps, double delta) const {
    if (scale_c > 0.0) return scale_c;
    double lg = std::log2(static_cast<double>(n) / delta);
    return std::max(16.0, lg / (eps * eps));
  }
};

// Repetition count with a chosen variance constant instead of the lemma's
// worst-case 160; even, and matched to the normal-approximation margin
// p*eps*sqrt(k/2).
inline std::uint32_t tuned_repetitions(double p, double eps, double factor) {
  auto k = static_cast<std::uint64_t>(std::ceil(factor / (p * p * eps * eps)));
  if (k % 2 == 1) ++k;
  return static_cast<std::uint32_t>(std::max<std::uint64_t>(k, 8));
}

// One estimator instance with priors: a length-capped turnstile sketch for
// short streams, and the small/large level machinery plus the half-quantile
// rule for long ones.
class C2Fp {
 public:
  C2Fp(double p, double eps, double delta, std::uint64_t n, double m0_prior,
       double g0_prior, std::uint64_t seed, const PipelineConfig& cfg = {})
      : p_(p), eps_(eps) {
    k_ = cfg.resolve_k(p, eps);
    double c = cfg.resolve_scale(n, eps, delta);
    double norm_prior = std::pow(std::max(1.0, g0_prior), 1.0 / p);
    LevelParams params = LevelParams::make(p, n, eps, norm_prior, c, cfg.d0);
    sampler_ = std::make_shared<const PInverseSampler>(p, k_, n, derive_seed(seed, 1));

    b1_ = std::make_unique<SmallApprox>(p, eps, 0.01, n, derive_seed(seed, 2),
                                        cfg.small_cap_factor);

    SmallContConfig sc;
    sc.p = p;
    sc.eps = eps;
    sc.universe = n;
    sc.k = k_;
    sc.params = params;
    sc.seed = derive_seed(seed, 3);
    sc.cs_rows = cfg.cs_rows;
    sc.cs_width_factor = cfg.cs_width_factor;
    sc.cs_width_cap = cfg.cs_width_cap;
    sc.quota_factor = cfg.quota_factor;
    sc.collision_audit = cfg.collision_audit;
    sc.profile_cache_cap = cfg.profile_cache_cap;
    b2_ = std::make_unique<SmallCont>(sc, sampler_);

    LargeContConfig lc;
    lc.p = p;
    lc.eps = eps;
    lc.universe = n;
    lc.k = k_;
    lc.gamma = cfg.gamma ? cfg.gamma : k_;
    lc.params = params;
    lc.z_mult = cfg.z_mult_factor / (eps * eps);
    lc.seed = derive_seed(seed, 4);
    lc.hhr_heaviness = cfg.hhr_heaviness;
    lc.hhr_c1 = cfg.hhr_c1;
    lc.hhr_c3 = cfg.hhr_c3;
    lc.hhr_keep = cfg.hhr_keep;
    lc.hh_eps = cfg.hh_eps;
    lc.hh_delta = cfg.hh_delta;
    lc.hh_opts = cfg.hhr_detector;
    b3_ = std::make_unique<LargeCont>(lc, sampler_);
  }

  void update(ItemId a) {
    ++seen_;
    b1_->update(a);
    b2_->update(a);
    b3_->update(a);
  }

  // B1 when it survived; otherwise the (k/2)-th largest of the combined
  // small/large outputs, p-th power, halved. nullopt = Fail.
  std::optional<double> query() const {
    if (!b1_->failed()) return b1_->query();
    auto small_vals = b2_->query();
    auto large_vals = b3_->query();
    if (!small_vals || !large_vals) return std::nullopt;
    std::vector<double> all = std::move(*small_vals);
    all.insert(all.end(), large_vals->begin(), large_vals->end());
    double r = quantile_estimate(std::move(all), k_);
    return std::pow(r, p_) / 2.0;
  }

  std::uint32_t repetitions() const { return k_; }
  std::uint64_t updates_seen() const { return seen_; }
  const SmallCont& small_cont() const { return *b2_; }
  const LargeCont& large_cont() const { return *b3_; }

  std::uint64_t machinery_consumed() const { return b3_->machinery_consumed(); }

  std::uint64_t bits_live() const {
    // Sampler state is the pairwise seed pair plus parameters.
    return b1_->bits_live() + b2_->bits_live() + b3_->bits_live() + 4 * 64;
  }

 private:
  double p_;
  double eps_;
  std::uint32_t k_ = 2;
  std::uint64_t seen_ = 0;
  std::shared_ptr<const PInverseSampler> sampler_;
  std::unique_ptr<SmallApprox> b1_;
  std::unique_ptr<SmallCont> b2_;
  std::unique_ptr<LargeCont> b3_;
};

}  // namespace smoments
