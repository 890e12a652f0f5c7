#pragma once

// Test-side closed-form Black-Scholes oracle (r = 0). Lives in test code and
// is independent of every pricing route it checks.

#include <cmath>
#include <numbers>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double bs_call(double s0, double strike, double sigma, double horizon) {
  const double sd = sigma * std::sqrt(horizon);
  const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma * horizon) / sd;
  const double d2 = d1 - sd;
  return s0 * normal_cdf(d1) - strike * normal_cdf(d2);
}

inline double bs_call_delta(double s0, double strike, double sigma, double horizon) {
  const double sd = sigma * std::sqrt(horizon);
  const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma * horizon) / sd;
  return normal_cdf(d1);
}

inline double bs_butterfly(double s0, double k_lo, double k_mid, double k_hi,
                           double sigma, double horizon) {
  return bs_call(s0, k_lo, sigma, horizon) - 2.0 * bs_call(s0, k_mid, sigma, horizon) +
         bs_call(s0, k_hi, sigma, horizon);
}

}  // namespace oracle
