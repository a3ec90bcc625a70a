#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace smoments {

// Level geometry for the scaled frequencies. Level 0 holds X >= C*L; level
// w >= 1 is the band C*L / 2^{w/p} < X <= C*L / 2^{(w-1)/p}. Bands below the
// cutoff (X too small to matter) map to none.
struct LevelParams {
  double scale_c = 16.0;   // C, poly(eps^-1, log n)
  double norm_prior = 1.0; // L, prior on F_p^{1/p}
  double p = 1.0;
  std::uint32_t w0 = 1;      // critical level splitting small/large frequencies
  std::uint32_t w_cutoff = 1;

  double anchor() const { return scale_c * norm_prior; }

  // X values above twice the anchor can be clamped: they are all level 0 and
  // only their level matters to band logic. Products use uncapped values.
  double cap() const { return 2.0 * anchor(); }

  static std::uint32_t critical_level(std::uint64_t n, double eps, double d0 = 4.0) {
    double ll = std::log2(std::max(2.0, std::log2(static_cast<double>(n))));
    return static_cast<std::uint32_t>(std::ceil(d0 * (ll + std::log2(1.0 / eps))));
  }

  static double default_scale(std::uint64_t n, double eps) {
    double lg = std::log2(static_cast<double>(n));
    return std::max(16.0, lg * lg / (eps * eps));
  }

  static LevelParams make(double p, std::uint64_t n, double eps, double norm_prior,
                          double scale_c, double d0 = 4.0) {
    if (!(norm_prior > 0.0) || !(scale_c >= 1.0))
      throw std::invalid_argument("LevelParams: need L > 0 and C >= 1");
    LevelParams lp;
    lp.p = p;
    lp.scale_c = scale_c;
    lp.norm_prior = norm_prior;
    lp.w0 = critical_level(n, eps, d0);
    // One past the band that holds X = 1, so bands cover all X >= 1.
    lp.w_cutoff = static_cast<std::uint32_t>(
                      std::ceil(p * std::log2(std::max(2.0, lp.anchor())))) + 1;
    return lp;
  }
};

// Band index of a scaling value, or nullopt beyond the cutoff. Monotone:
// larger X never maps to a larger level.
inline std::optional<std::uint32_t> level_of(const LevelParams& lp, double x) {
  if (x < 1.0) throw std::domain_error("level_of: X must be >= 1");
  const double cl = lp.anchor();
  if (x >= cl) return 0;
  // Band predicate: cl / 2^{w/p} < x <= cl / 2^{(w-1)/p}, i.e.
  // w - 1 <= p * log2(cl / x) < w. Fix up float error at band edges.
  double y = lp.p * std::log2(cl / x);
  auto w = static_cast<std::int64_t>(std::floor(y)) + 1;
  auto below = [&](std::int64_t v) {  // true iff cl / 2^{v/p} < x
    return cl < x * std::exp2(static_cast<double>(v) / lp.p);
  };
  while (w > 1 && below(w - 1)) --w;
  while (!below(w)) ++w;
  if (w > static_cast<std::int64_t>(lp.w_cutoff)) return std::nullopt;
  return static_cast<std::uint32_t>(w);
}

}  // namespace smoments
