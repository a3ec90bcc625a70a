#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace smoments {

// j-th largest (1-indexed) of the values, padding with zeros up to k entries
// when fewer were reported. k must be even; the caller turns the returned
// (k/2)-th largest into a moment estimate via value^p / 2.
inline double quantile_estimate(std::vector<double> values, std::uint32_t k) {
  if (k == 0 || k % 2 != 0)
    throw std::invalid_argument("quantile_estimate: k must be even and positive");
  const std::uint32_t j = k / 2;
  if (values.size() < k) values.resize(k, 0.0);
  std::nth_element(values.begin(), values.begin() + (j - 1), values.end(),
                   std::greater<double>());
  return values[j - 1];
}

}  // namespace smoments
