#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace heatcast {

// Linearly interpolated quantile of an ascending sample (Hyndman-Fan type 7).
inline double linear_quantile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted.front();
  const double h = std::clamp(p, 0.0, 1.0) * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace heatcast
