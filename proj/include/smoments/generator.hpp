#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoments/stream.hpp"

namespace smoments {

// Dataset profiles used by the harness. Zipf and planted-heavy meet their
// declared frequency profile exactly; uniform draws each update iid from [n].
struct GeneratorSpec {
  enum class Kind { Uniform, Zipf, PlantedHeavy };

  Kind kind = Kind::Uniform;
  std::uint64_t n = 1;
  std::uint64_t m = 1;
  std::uint64_t seed = 0;
  double skew = 1.0;                 // zipf exponent
  std::uint64_t heavy_count = 1;     // planted-heavy: number of heavy items
  std::uint64_t heavy_freq = 1;      // planted-heavy: frequency of each
  std::uint64_t background = 0;      // planted-heavy: singleton items
};

namespace detail {

// Largest-remainder rounding of proportional shares so counts sum to m and
// every item gets at least one update.
inline std::vector<std::uint64_t> zipf_profile(std::uint64_t n, std::uint64_t m,
                                               double skew) {
  std::vector<double> w(n);
  double total = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    w[i] = 1.0 / std::pow(static_cast<double>(i + 1), skew);
    total += w[i];
  }
  std::vector<std::uint64_t> f(n);
  std::vector<std::pair<double, std::uint64_t>> rema(n);
  std::uint64_t assigned = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    double share = w[i] / total * static_cast<double>(m);
    f[i] = static_cast<std::uint64_t>(share);
    rema[i] = {share - static_cast<double>(f[i]), i};
    assigned += f[i];
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t j = 0; assigned < m; ++j, ++assigned) f[rema[j % n].second] += 1;
  return f;
}

}  // namespace detail

inline Stream generate(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.m < 1)
    throw std::invalid_argument("generate: need n >= 1 and m >= 1");
  Stream s;
  s.universe = spec.n;
  s.updates.reserve(spec.m);

  switch (spec.kind) {
    case GeneratorSpec::Kind::Uniform: {
      SplitMix64 rng(derive_seed(spec.seed, 0));
      for (std::uint64_t i = 0; i < spec.m; ++i)
        s.updates.push_back(rng.next_below(spec.n) + 1);
      return s;
    }
    case GeneratorSpec::Kind::Zipf: {
      auto profile = detail::zipf_profile(spec.n, spec.m, spec.skew);
      for (std::uint64_t i = 0; i < spec.n; ++i)
        for (std::uint64_t c = 0; c < profile[i]; ++c) s.updates.push_back(i + 1);
      break;
    }
    case GeneratorSpec::Kind::PlantedHeavy: {
      if (spec.heavy_count * spec.heavy_freq + spec.background != spec.m)
        throw std::invalid_argument(
            "generate: heavy_count*heavy_freq + background must equal m");
      if (spec.heavy_count + spec.background > spec.n)
        throw std::invalid_argument("generate: profile needs more items than n");
      for (std::uint64_t h = 0; h < spec.heavy_count; ++h)
        for (std::uint64_t c = 0; c < spec.heavy_freq; ++c) s.updates.push_back(h + 1);
      for (std::uint64_t b = 0; b < spec.background; ++b)
        s.updates.push_back(spec.heavy_count + b + 1);
      break;
    }
  }
  return shuffle(s, derive_seed(spec.seed, 1));
}

}  // namespace smoments
