#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace qsa {

/// Neumaier compensated sum. Reductions over per-path values go through
/// this in a fixed order so results do not depend on the thread count.
inline double stable_sum(std::span<const double> xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) {
      c += (s - t) + x;
    } else {
      c += (x - t) + s;
    }
    s = t;
  }
  return s + c;
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty sample");
  return stable_sum(xs) / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance: need two samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty sample");
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + mid - 1, xs.begin() + mid);
  return 0.5 * (xs[mid - 1] + hi);
}

/// q in [0,1]; nearest-rank on the sorted sample.
inline double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("percentile: empty sample");
  q = std::clamp(q, 0.0, 1.0);
  const auto r = static_cast<std::size_t>(q * static_cast<double>(xs.size() - 1));
  std::nth_element(xs.begin(), xs.begin() + r, xs.end());
  return xs[r];
}

/// Mean under normalized weights (weights must sum to ~1).
inline double weighted_mean(std::span<const double> xs, std::span<const double> ws) {
  if (xs.size() != ws.size() || xs.empty())
    throw std::invalid_argument("weighted_mean: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += ws[i] * xs[i];
  return s;
}

/// Standard error of the weighted mean for normalized weights.
inline double weighted_standard_error(std::span<const double> xs,
                                      std::span<const double> ws) {
  const double m = weighted_mean(xs, ws);
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - m;
    s += ws[i] * ws[i] * d * d;
  }
  return std::sqrt(s);
}

}  // namespace qsa
