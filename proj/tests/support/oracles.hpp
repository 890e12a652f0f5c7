#pragma once

// Independent test-side oracles. Each is a different computational route
// from the implementation it validates.

#include <cmath>
#include <vector>

#include "qsa/path.hpp"

namespace oracle {

/// Occupation-time local time estimator: with the convention
/// L_t = (|X_t - a| - |X_0 - a| - int sgn dX) / 2 the occupation formula
/// reads int_0^t f(X_s) d<X>_s = 2 int f(a) L_t^a da, so
/// L_t^a ~ (1 / 4 eps) int 1{|X - a| <= eps} d<X>.
inline double occupation_local_time(const qsa::Path& x, double level, double eps) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    if (std::abs(x.value(k) - level) <= eps) {
      const double dx = x.value(k + 1) - x.value(k);
      acc += dx * dx;
    }
  }
  return acc / (4.0 * eps);
}

/// Trapezoid quadrature of a deterministic integrand on [0, T].
inline double quadrature(const std::vector<double>& times,
                         const std::vector<double>& values) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    acc += 0.5 * (values[k] + values[k + 1]) * (times[k + 1] - times[k]);
  return acc;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

/// 99% two-sample KS critical value.
inline double ks_critical_99(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) /
                           static_cast<double>(n) / static_cast<double>(m));
}

}  // namespace oracle
