#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace tlscensus::analysis {

struct PeakCandidate {
  std::size_t index = 0;
  double prominence = 0.0;
};

/// Interior local maxima. A flat top counts once, at its middle sample
/// (left-of-centre for even widths). End points are never maxima.
inline std::vector<std::size_t> local_maxima(std::span<const double> y) {
  std::vector<std::size_t> out;
  const std::size_t n = y.size();
  if (n < 3) return out;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (y[i - 1] < y[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && y[ahead] == y[i]) ++ahead;
      if (y[ahead] < y[i]) {
        out.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return out;
}

/// Height of y[peak] above the higher of its two bounding minima, each
/// taken over the stretch reaching outward until a strictly higher sample
/// or the end of the series.
inline double prominence(std::span<const double> y, std::size_t peak) {
  const double h = y[peak];
  double left_min = h;
  for (std::size_t i = peak; i-- > 0;) {
    if (y[i] > h) break;
    left_min = std::min(left_min, y[i]);
  }
  double right_min = h;
  for (std::size_t i = peak + 1; i < y.size(); ++i) {
    if (y[i] > h) break;
    right_min = std::min(right_min, y[i]);
  }
  return h - std::max(left_min, right_min);
}

inline std::vector<PeakCandidate> find_prominent_peaks(std::span<const double> y, double min_prominence) {
  std::vector<PeakCandidate> out;
  for (std::size_t idx : local_maxima(y)) {
    const double p = prominence(y, idx);
    if (p >= min_prominence) out.push_back({idx, p});
  }
  return out;
}

}  // namespace tlscensus::analysis
