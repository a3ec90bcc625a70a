#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "smoments/bit_budget.hpp"
#include "smoments/pairwise_hash.hpp"
#include "smoments/stream.hpp"

namespace smoments {

namespace detail {

// Symmetric p-stable variate via the Chambers-Mallows-Stuck transform.
// theta in (-pi/2, pi/2), w = Exp(1).
inline double cms_stable(double p, double u_theta, double u_w) {
  double theta = M_PI * (u_theta - 0.5);
  double w = -std::log(u_w);
  if (std::abs(p - 1.0) < 1e-12) return std::tan(theta);
  double a = std::sin(p * theta) / std::pow(std::cos(theta), 1.0 / p);
  double b = std::pow(std::cos((1.0 - p) * theta) / w, (1.0 - p) / p);
  return a * b;
}

// Median of |S_p| from a stratified grid over the CMS inputs; deterministic
// per p and accurate to ~0.3% at this resolution.
inline double median_abs_stable(double p) {
  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
  }
  constexpr int kGrid = 801;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(kGrid) * kGrid);
  for (int i = 0; i < kGrid; ++i) {
    double u1 = (i + 0.5) / kGrid;
    for (int j = 0; j < kGrid; ++j) {
      double u2 = (j + 0.5) / kGrid;
      samples.push_back(std::abs(cms_stable(p, u1, u2)));
    }
  }
  auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  double med = *mid;
  std::lock_guard<std::mutex> lk(mu);
  cache.emplace(p, med);
  return med;
}

}  // namespace detail

struct TurnstileFpOptions {
  std::uint32_t projections = 0;  // 0 = derive from eps, delta
  std::uint64_t max_updates = 0;  // 0 = unlimited; otherwise Fail past the cap
};

// Classical p-stable median sketch meeting the turnstile F_p contract:
// query returns (1 +- eps) F_p with probability >= 1 - delta, or Fail once
// the update cap is exceeded. Stable variates come from pairwise-seeded
// uniforms through the CMS transform.
class TurnstileFp {
 public:
  TurnstileFp(double p, double eps, double delta, std::uint64_t universe,
              std::uint64_t seed, TurnstileFpOptions opts = {})
      : p_(p), universe_(universe), cap_(opts.max_updates) {
    if (!(p > 0.0) || !(p < 2.0))
      throw std::invalid_argument("TurnstileFp: p must lie in (0, 2)");
    projections_ =
        opts.projections
            ? opts.projections
            : static_cast<std::uint32_t>(
                  std::ceil(6.0 / (eps * eps) * std::log2(1.0 / delta)));
    if (projections_ % 2 == 0) ++projections_;
    using u128 = unsigned __int128;
    if (static_cast<u128>(universe) * projections_ * 2 >= PairwiseHash::kPrime)
      throw std::invalid_argument("TurnstileFp: universe * projections too large");
    theta_hash_ = PairwiseHash(derive_seed(seed, 0), 2);
    w_hash_ = PairwiseHash(derive_seed(seed, 1), 2);
    accum_.assign(projections_, 0.0);
    scale_ = detail::median_abs_stable(p_);
  }

  void update(ItemId a, double w = 1.0) {
    if (failed_) return;
    ++seen_;
    if (cap_ != 0 && seen_ > cap_) {
      failed_ = true;
      accum_.clear();
      accum_.shrink_to_fit();
      variates_.clear();
      return;
    }
    const std::vector<float>& v = variates_for(a);
    for (std::uint32_t j = 0; j < projections_; ++j) accum_[j] += w * v[j];
  }

  bool failed() const { return failed_; }
  std::uint64_t updates_seen() const { return seen_; }
  std::uint32_t projections() const { return projections_; }

  // F_p estimate, or nullopt once failed.
  std::optional<double> query() const {
    if (failed_) return std::nullopt;
    std::vector<double> mags;
    mags.reserve(projections_);
    for (double y : accum_) mags.push_back(std::abs(y));
    auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    double norm = *mid / scale_;
    return std::pow(norm, p_);
  }

  // Logical state: the projection accumulators at the width of the largest
  // magnitude, plus the two hash seeds. The variate cache is a recomputable
  // memo and not part of the accounted state.
  std::uint64_t bits_live() const {
    if (failed_) return 64;
    double max_mag = 1.0;
    for (double y : accum_) max_mag = std::max(max_mag, std::abs(y));
    return projections_ * (bits_for_magnitude(max_mag) + 16) + 4 * 64;
  }

 private:
  const std::vector<float>& variates_for(ItemId a) {
    auto it = variates_.find(a);
    if (it != variates_.end()) return it->second;
    std::vector<float> v(projections_);
    for (std::uint32_t j = 0; j < projections_; ++j) {
      std::uint64_t key = (a - 1) * projections_ + j;
      double u1 = (static_cast<double>(theta_hash_.raw(key)) + 0.5) /
                  static_cast<double>(PairwiseHash::kPrime);
      double u2 = (static_cast<double>(w_hash_.raw(key)) + 0.5) /
                  static_cast<double>(PairwiseHash::kPrime);
      v[j] = static_cast<float>(detail::cms_stable(p_, u1, u2));
    }
    return variates_.emplace(a, std::move(v)).first->second;
  }

  double p_;
  std::uint64_t universe_;
  std::uint64_t cap_;
  std::uint32_t projections_ = 0;
  std::uint64_t seen_ = 0;
  bool failed_ = false;
  double scale_ = 1.0;
  PairwiseHash theta_hash_;
  PairwiseHash w_hash_;
  std::vector<double> accum_;
  std::unordered_map<ItemId, std::vector<float>> variates_;
};

}  // namespace smoments
