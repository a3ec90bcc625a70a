#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "smoments/turnstile_fp.hpp"

namespace smoments {

// Turnstile F_p sketch restricted to short streams: once the update counter
// exceeds the poly(1/eps, log n) cap the instance fails, which tells the
// caller the stream is long enough for the random-order machinery.
class SmallApprox {
 public:
  SmallApprox(double p, double eps, double delta, std::uint64_t universe,
              std::uint64_t seed, double cap_factor = 1.0)
      : cap_(cap_for(eps, universe, cap_factor)),
        inner_(p, eps, delta, universe, seed, TurnstileFpOptions{0, cap_for(eps, universe, cap_factor)}) {}

  static std::uint64_t cap_for(double eps, std::uint64_t universe, double factor) {
    double lg = std::log2(static_cast<double>(universe < 2 ? 2 : universe));
    return static_cast<std::uint64_t>(std::ceil(factor * lg * lg / (eps * eps)));
  }

  void update(ItemId a, double w = 1.0) { inner_.update(a, w); }

  bool failed() const { return inner_.failed(); }
  std::uint64_t cap() const { return cap_; }
  std::uint64_t updates_seen() const { return inner_.updates_seen(); }

  std::optional<double> query() const { return inner_.query(); }

  std::uint64_t bits_live() const { return inner_.bits_live(); }

 private:
  std::uint64_t cap_;
  TurnstileFp inner_;
};

}  // namespace smoments
