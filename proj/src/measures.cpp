#include "qsa/measures.hpp"

#include <cmath>

#include "qsa/calculus.hpp"
#include "qsa/parallel.hpp"
#include "qsa/stats.hpp"

namespace qsa {

Path strong_solution(const SeparableCoefficient& a, const Path& driver) {
  const std::size_t d = driver.dim();
  if (a.dim() != d)
    throw std::invalid_argument("strong_solution: coefficient dimension mismatch");
  Path x(driver.grid_ptr(), d);
  CoefficientCursor cursor(a, x);
  std::vector<double> db(d), dx(d);
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    const SpdMatrix* m = cursor.at(k);
    for (std::size_t i = 0; i < d; ++i) db[i] = driver.at(k + 1, i) - driver.at(k, i);
    m->apply_sqrt(db, dx);
    for (std::size_t i = 0; i < d; ++i) x.at(k + 1, i) = x.at(k, i) + dx[i];
  }
  return x;
}

namespace detail {

template <class Driver>
PathEnsemble sample_measure_with(const MeasureSampler& s, std::size_t n, Driver&& drive) {
  if (n < 1) throw std::invalid_argument("sample_measure: need at least one path");
  const GridPtr& grid = s.coefficient.grid();
  const std::size_t d = s.coefficient.dim();
  PathEnsemble e;
  e.seed = s.seed;
  e.first_stream = s.stream_offset;
  e.paths.assign(n, Path(grid, d));
  e.weights = PathEnsemble::uniform_weights(n);
  drive(n, [&](std::size_t i) {
    const Path driver = brownian_path(grid, d, s.seed, s.stream_offset + i);
    e.paths[i] = strong_solution(s.coefficient, driver);
  });
  return e;
}

}  // namespace detail

PathEnsemble sample_measure(const MeasureSampler& s, std::size_t n) {
  return detail::sample_measure_with(
      s, n, [](std::size_t m, auto&& f) { parallel_for(m, f); });
}

PathEnsemble sample_measure_serial(const MeasureSampler& s, std::size_t n) {
  return detail::sample_measure_with(
      s, n, [](std::size_t m, auto&& f) { serial_for(m, f); });
}

void for_each_sample(const MeasureSampler& s, std::size_t n,
                     const std::function<void(std::size_t, const Path&, const Path&)>& fn) {
  const GridPtr& grid = s.coefficient.grid();
  const std::size_t d = s.coefficient.dim();
  parallel_for(n, [&](std::size_t i) {
    const Path driver = brownian_path(grid, d, s.seed, s.stream_offset + i);
    const Path x = strong_solution(s.coefficient, driver);
    fn(i, x, driver);
  });
}

UniversalBmResult universal_bm_exact(const Path& x, const SeparableCoefficient& a) {
  const std::size_t d = x.dim();
  const CoefficientTrace tr = a.trace(x);
  UniversalBmResult res{Path(x.grid_ptr(), d), 0};
  std::vector<double> dx(d), dw(d);
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    for (std::size_t i = 0; i < d; ++i) dx[i] = x.at(k + 1, i) - x.at(k, i);
    tr.at[k]->apply_inv_sqrt(dx, dw);
    for (std::size_t i = 0; i < d; ++i) res.w.at(k + 1, i) = res.w.at(k, i) + dw[i];
  }
  return res;
}

UniversalBmResult universal_bm_estimated(const Path& x, std::size_t window,
                                         double eig_floor) {
  const std::size_t d = x.dim();
  if (window == 0) window = default_qv_window(x.steps());
  const MatrixPath density = qv_density(x, window);
  UniversalBmResult res{Path(x.grid_ptr(), d), 0};
  std::vector<double> dx(d), dw(d), sq(d * d), isq(d * d);
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    const std::size_t floored =
        symmetric_sqrt_floored(d, density.mat(k), eig_floor, sq, isq);
    if (floored > 0) ++res.floored_windows;
    for (std::size_t i = 0; i < d; ++i) dx[i] = x.at(k + 1, i) - x.at(k, i);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += isq[i * d + j] * dx[j];
      dw[i] = s;
    }
    for (std::size_t i = 0; i < d; ++i) res.w.at(k + 1, i) = res.w.at(k, i) + dw[i];
  }
  return res;
}

std::size_t default_classify_burn_in(std::size_t steps) {
  return std::max(default_qv_window(steps), steps / 5);
}

std::optional<std::size_t> classify_support(const Path& x,
                                            std::span<const SeparableCoefficient> candidates,
                                            double tol, std::size_t burn_in) {
  if (candidates.empty()) return std::nullopt;
  if (burn_in == 0) burn_in = default_classify_burn_in(x.steps());
  const MatrixPath qv = quadratic_variation(x);
  const std::size_t d = x.dim();
  std::optional<std::size_t> found;
  std::vector<double> integral(d * d);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const CoefficientTrace tr = candidates[c].trace(x);
    std::fill(integral.begin(), integral.end(), 0.0);
    bool match = true;
    for (std::size_t k = 0; k + 1 < x.points(); ++k) {
      const double dt = x.grid().step(k);
      for (std::size_t v = 0; v < integral.size(); ++v)
        integral[v] += tr.at[k]->data()[v] * dt;
      if (k + 1 < burn_in) continue;
      double gap = 0.0, scale = 0.0;
      for (std::size_t v = 0; v < integral.size(); ++v) {
        gap = std::max(gap, std::abs(qv.mat(k + 1)[v] - integral[v]));
        scale = std::max(scale, std::abs(integral[v]));
      }
      if (gap > tol * scale) {
        match = false;
        break;
      }
    }
    if (match) {
      if (found) return std::nullopt;  // ambiguous
      found = c;
    }
  }
  return found;
}

StrongIdentityReport verify_strong_identity(const SeparableCoefficient& a,
                                            std::size_t n, std::uint64_t seed,
                                            std::size_t window) {
  const GridPtr& grid = a.grid();
  const std::size_t steps = grid->steps();
  if (window == 0)
    window = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(steps), 2.0 / 3.0)));
  window = std::min(window, steps);

  std::vector<std::vector<double>> per_path(n);
  MeasureSampler sampler{a, seed, 0};
  for_each_sample(sampler, n, [&](std::size_t i, const Path& x, const Path&) {
    CoefficientTrace tr;
    {
      CoefficientCursor cursor(a, x, &tr);
      for (std::size_t k = 0; k < x.points(); ++k) cursor.at(k);
    }
    const MatrixPath est = qv_density(x, window);
    const std::size_t d = x.dim();

    // Trailing-window average of the coefficient along the same path; the
    // difference quotient estimates exactly this at finite window width.
    std::vector<double> cumulative((steps + 1) * d * d, 0.0);
    for (std::size_t k = 0; k < steps; ++k)
      for (std::size_t v = 0; v < d * d; ++v)
        cumulative[(k + 1) * d * d + v] =
            cumulative[k * d * d + v] + tr.at[k]->data()[v] * grid->step(k);

    // Exclude windows touching a coefficient discontinuity.
    std::vector<char> excluded(steps + 1, 0);
    for (std::size_t s : tr.switches)
      for (std::size_t k = s; k < std::min(s + window + 1, steps + 1); ++k)
        excluded[k] = 1;

    std::vector<double>& errors = per_path[i];
    errors.reserve(steps + 1 - window);
    for (std::size_t k = window; k <= steps; ++k) {
      if (excluded[k]) continue;
      const double span = grid->time(k) - grid->time(k - window);
      double gap = 0.0, scale = 0.0;
      for (std::size_t v = 0; v < d * d; ++v) {
        const double avg =
            (cumulative[k * d * d + v] - cumulative[(k - window) * d * d + v]) / span;
        gap = std::max(gap, std::abs(est.mat(k)[v] - avg));
        scale = std::max(scale, std::abs(avg));
      }
      errors.push_back(gap / scale);
    }
  });

  StrongIdentityReport report;
  report.window = window;
  std::vector<double> pooled;
  std::size_t path_pass = 0, paths_with_data = 0;
  for (const auto& errs : per_path) {
    if (errs.empty()) continue;
    ++paths_with_data;
    if (median(errs) <= 0.05) ++path_pass;
    pooled.insert(pooled.end(), errs.begin(), errs.end());
  }
  if (pooled.empty()) throw std::runtime_error("verify_strong_identity: no usable windows");
  report.samples = pooled.size();
  report.median_rel_error = median(std::move(pooled));
  report.path_pass_fraction =
      static_cast<double>(path_pass) / static_cast<double>(paths_with_data);
  report.pass = report.median_rel_error <= 0.05;
  return report;
}

}  // namespace qsa
