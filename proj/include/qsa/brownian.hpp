#pragma once

#include <cmath>
#include <cstdint>

#include "qsa/parallel.hpp"
#include "qsa/path.hpp"
#include "qsa/rng.hpp"

namespace qsa {

/// One Brownian path from stream (seed, stream): independent Gaussian
/// increments with covariance (t_{k+1} - t_k) I_d, started at zero.
inline Path brownian_path(const GridPtr& grid, std::size_t dim, std::uint64_t seed,
                          std::uint64_t stream) {
  Path p(grid, dim);
  NormalStream g(seed, stream);
  for (std::size_t k = 0; k + 1 < p.points(); ++k) {
    const double s = std::sqrt(grid->step(k));
    for (std::size_t i = 0; i < dim; ++i)
      p.at(k + 1, i) = p.at(k, i) + s * g.next_normal();
  }
  return p;
}

namespace detail {

template <class Driver>
PathEnsemble sample_brownian_with(const GridPtr& grid, std::size_t dim, std::size_t n,
                                  std::uint64_t seed, Driver&& drive) {
  if (n < 1) throw std::invalid_argument("sample_brownian: need at least one path");
  if (dim < 1) throw std::invalid_argument("sample_brownian: dimension must be >= 1");
  PathEnsemble e;
  e.seed = seed;
  e.first_stream = 0;
  e.paths.assign(n, Path(grid, dim));
  e.weights = PathEnsemble::uniform_weights(n);
  drive(n, [&](std::size_t i) { e.paths[i] = brownian_path(grid, dim, seed, i); });
  return e;
}

}  // namespace detail

inline PathEnsemble sample_brownian(const GridPtr& grid, std::size_t dim, std::size_t n,
                                    std::uint64_t seed) {
  return detail::sample_brownian_with(grid, dim, n, seed,
                                      [](std::size_t m, auto&& f) { parallel_for(m, f); });
}

/// Serial reference; must produce output bit-identical to sample_brownian.
inline PathEnsemble sample_brownian_serial(const GridPtr& grid, std::size_t dim,
                                           std::size_t n, std::uint64_t seed) {
  return detail::sample_brownian_with(grid, dim, n, seed,
                                      [](std::size_t m, auto&& f) { serial_for(m, f); });
}

}  // namespace qsa
