#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace qsa {

/// Time grid 0 = t_0 < t_1 < ... < t_N = T. Immutable after construction
/// and shared between paths via shared_ptr.
class Grid {
 public:
  // A single-point grid {0} is allowed only as the image of a restriction
  // to t = 0; every constructive operation requires at least one step.
  explicit Grid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty()) throw std::invalid_argument("grid: no times");
    if (times_.front() != 0.0) throw std::invalid_argument("grid: times must start at 0");
    for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
      if (!(times_[k + 1] > times_[k]))
        throw std::invalid_argument("grid: times must be strictly increasing");
    }
    if (times_.size() < 2) {
      uniform_ = true;
      dt_ = 0.0;
      return;
    }
    const double h0 = times_[1] - times_[0];
    uniform_ = true;
    for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
      if (std::abs(times_[k + 1] - times_[k] - h0) > 1e-12 * std::max(1.0, h0)) {
        uniform_ = false;
        break;
      }
    }
    dt_ = uniform_ ? h0 : 0.0;
  }

  const std::vector<double>& times() const { return times_; }
  std::size_t steps() const { return times_.size() - 1; }       // N
  std::size_t points() const { return times_.size(); }          // N + 1
  double horizon() const { return times_.back(); }
  double time(std::size_t k) const { return times_[k]; }
  double step(std::size_t k) const { return times_[k + 1] - times_[k]; }
  bool uniform() const { return uniform_; }
  double dt() const { return dt_; }

  /// Index of a grid time; off-grid times are rejected, never interpolated.
  std::size_t index_of(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    if (uniform_ && dt_ > 0.0) {
      const auto k = static_cast<std::size_t>(std::llround(t / dt_));
      if (k < times_.size() && std::abs(times_[k] - t) <= tol) return k;
    } else {
      auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
      if (it != times_.end() && std::abs(*it - t) <= tol)
        return static_cast<std::size_t>(it - times_.begin());
    }
    throw std::invalid_argument("grid: time not on grid");
  }

  bool contains(double t) const {
    try {
      index_of(t);
      return true;
    } catch (const std::invalid_argument&) {
      return false;
    }
  }

 private:
  std::vector<double> times_;
  bool uniform_ = true;
  double dt_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Uniform grid with step T/N.
inline GridPtr make_grid(double T, std::size_t N) {
  if (!(T > 0.0)) throw std::invalid_argument("make_grid: horizon must be positive");
  if (N < 1) throw std::invalid_argument("make_grid: need at least one step");
  std::vector<double> times(N + 1);
  for (std::size_t k = 0; k <= N; ++k)
    times[k] = T * static_cast<double>(k) / static_cast<double>(N);
  return std::make_shared<Grid>(std::move(times));
}

inline GridPtr grid_from_times(std::vector<double> times) {
  return std::make_shared<Grid>(std::move(times));
}

}  // namespace qsa
