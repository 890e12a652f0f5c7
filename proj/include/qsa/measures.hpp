#pragma once

#include <functional>
#include <optional>

#include "qsa/brownian.hpp"
#include "qsa/coefficients.hpp"

namespace qsa {

/// Empirical representation of the measure induced by a diffusion
/// coefficient: a seeded generator of strong-solution paths driven by the
/// Wiener sampler. Sampling is bit-reproducible given (seed, stream_offset).
struct MeasureSampler {
  SeparableCoefficient coefficient;
  std::uint64_t seed = 0;
  std::uint64_t stream_offset = 0;
};

/// Euler scheme for dX = a^(1/2)(X_.) dB along the inductive level
/// construction: stopping rules and partition events are evaluated on the
/// solution path, not the driver. Exact in distribution for
/// piecewise-constant-in-time generators.
Path strong_solution(const SeparableCoefficient& a, const Path& driver);

PathEnsemble sample_measure(const MeasureSampler& sampler, std::size_t n);
PathEnsemble sample_measure_serial(const MeasureSampler& sampler, std::size_t n);

/// Streaming variant: visits (index, solution, driver) without materializing
/// the ensemble. The visitor is called concurrently and must be thread-safe;
/// per-index results are reproducible under any schedule.
void for_each_sample(const MeasureSampler& sampler, std::size_t n,
                     const std::function<void(std::size_t, const Path&, const Path&)>& fn);

struct UniversalBmResult {
  Path w;
  std::size_t floored_windows = 0;  // estimated mode: windows regularized
};

/// W = int a^(-1/2) dX with the exact generating coefficient evaluated along x.
UniversalBmResult universal_bm_exact(const Path& x, const SeparableCoefficient& a);

/// W = int qv_density^(-1/2) dX; non-SPD windows are floored at `eig_floor`
/// and counted, never silently fixed. window = 0 picks ceil(sqrt(N)).
UniversalBmResult universal_bm_estimated(const Path& x, std::size_t window = 0,
                                         double eig_floor = 1e-8);

/// Index of the unique candidate whose running integral int a ds matches the
/// path's running quadratic variation within `tol` (relative, uniformly on
/// the grid past burn-in); nullopt when no or multiple candidates match.
std::optional<std::size_t> classify_support(const Path& x,
                                            std::span<const SeparableCoefficient> candidates,
                                            double tol, std::size_t burn_in = 0);

std::size_t default_classify_burn_in(std::size_t steps);

struct StrongIdentityReport {
  double median_rel_error = 0.0;     // pooled over paths and grid times
  double path_pass_fraction = 0.0;   // paths whose own median is within 5%
  std::size_t samples = 0;
  std::size_t window = 0;
  bool pass = false;                 // pooled median <= 5%
};

/// Checks that the estimated quadratic-variation density along sampled
/// solutions recovers the generating coefficient: the window-averaged
/// coefficient is the comparison target, and windows touching a coefficient
/// discontinuity or the burn-in region are excluded.
StrongIdentityReport verify_strong_identity(const SeparableCoefficient& a,
                                            std::size_t n, std::uint64_t seed,
                                            std::size_t window = 0);

}  // namespace qsa
