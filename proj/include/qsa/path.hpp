#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qsa/grid.hpp"

namespace qsa {

/// d-dimensional sample path on a grid. Values are stored row-major,
/// one point per grid time; all calculus reads grid increments only.
class Path {
 public:
  Path(GridPtr grid, std::size_t dim)
      : grid_(std::move(grid)), dim_(dim), values_(grid_->points() * dim, 0.0) {
    if (dim_ < 1) throw std::invalid_argument("path: dimension must be >= 1");
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t dim() const { return dim_; }
  std::size_t points() const { return grid_->points(); }
  std::size_t steps() const { return grid_->steps(); }

  double& at(std::size_t k, std::size_t i) { return values_[k * dim_ + i]; }
  double at(std::size_t k, std::size_t i) const { return values_[k * dim_ + i]; }

  /// Scalar access for d = 1 paths.
  double value(std::size_t k) const { return values_[k * dim_]; }
  double& value(std::size_t k) { return values_[k * dim_]; }

  std::span<const double> point(std::size_t k) const {
    return {values_.data() + k * dim_, dim_};
  }
  std::span<double> point(std::size_t k) {
    return {values_.data() + k * dim_, dim_};
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool canonical() const {
    for (std::size_t i = 0; i < dim_; ++i)
      if (values_[i] != 0.0) return false;
    return true;
  }

 private:
  GridPtr grid_;
  std::size_t dim_;
  std::vector<double> values_;
};

/// Truncation x|_[0,t]. t must be a grid point; restricting to t = 0 yields
/// the single initial point.
inline Path restrict(const Path& x, double t) {
  const std::size_t k = x.grid().index_of(t);
  std::vector<double> times(x.grid().times().begin(), x.grid().times().begin() + k + 1);
  Path out(grid_from_times(std::move(times)), x.dim());
  for (std::size_t j = 0; j <= k; ++j)
    for (std::size_t i = 0; i < x.dim(); ++i) out.at(j, i) = x.at(j, i);
  return out;
}

/// Weighted family of paths on one shared grid; the empirical stand-in for
/// a probability measure. Seed provenance records how paths were drawn:
/// path i came from stream (seed, first_stream + i).
struct PathEnsemble {
  std::vector<Path> paths;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  std::uint64_t first_stream = 0;

  std::size_t size() const { return paths.size(); }
  const Grid& grid() const { return paths.front().grid(); }

  void validate() const {
    if (paths.empty()) throw std::invalid_argument("ensemble: no paths");
    if (weights.size() != paths.size())
      throw std::invalid_argument("ensemble: weight count mismatch");
    const Grid* g = &paths.front().grid();
    for (const Path& p : paths)
      if (&p.grid() != g) throw std::invalid_argument("ensemble: grids differ");
    double s = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("ensemble: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("ensemble: weights must sum to one");
  }

  static std::vector<double> uniform_weights(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  }
};

}  // namespace qsa
