#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qsa/path.hpp"

namespace qsa {

/// Adapted row-vector integrand H: evaluation at index k may read the path
/// only on [0, t_k]. Adaptedness is a contract, not enforced by types; it is
/// checked by perturb-after-t tests (see is_adapted), which is what lets
/// deliberately anticipating integrands be built for negative tests.
class Integrand {
 public:
  using Fn = std::function<void(const Path&, std::size_t, std::span<double>)>;

  Integrand(std::size_t width, Fn fn) : width_(width), fn_(std::move(fn)) {}

  std::size_t width() const { return width_; }

  void eval(const Path& x, std::size_t k, std::span<double> out) const {
    fn_(x, k, out);
  }

  static Integrand constant(std::vector<double> row);
  static Integrand zero(std::size_t width);
  /// d = 1 integrand from a scalar rule.
  static Integrand scalar(std::function<double(const Path&, std::size_t)> f);

 private:
  std::size_t width_;
  Fn fn_;
};

/// Symmetric-matrix-valued path (quadratic variation, its density).
struct MatrixPath {
  GridPtr grid;
  std::size_t dim = 0;
  std::vector<double> values;  // (N+1) * d * d, row-major per point

  MatrixPath() = default;
  MatrixPath(GridPtr g, std::size_t d)
      : grid(std::move(g)), dim(d), values(grid->points() * d * d, 0.0) {}

  double at(std::size_t k, std::size_t i, std::size_t j) const {
    return values[(k * dim + i) * dim + j];
  }
  double& at(std::size_t k, std::size_t i, std::size_t j) {
    return values[(k * dim + i) * dim + j];
  }
  std::span<const double> mat(std::size_t k) const {
    return {values.data() + k * dim * dim, dim * dim};
  }
  std::span<double> mat(std::size_t k) {
    return {values.data() + k * dim * dim, dim * dim};
  }
  std::size_t points() const { return grid->points(); }
};

/// Non-anticipating integral I_{t_{k+1}} = I_{t_k} + H(x|_[0,t_k], t_k) . dx_k.
/// Left-endpoint evaluation only.
Path ito_integral(const Integrand& h, const Path& x);

/// Running sum of increment outer products sum dx dx^T (the direct form).
MatrixPath quadratic_variation(const Path& x);

/// The same object through the algebraic identity x x^T - 2 Sym(int x dx^T);
/// agrees with the direct form up to rounding on every grid path.
MatrixPath quadratic_variation_identity(const Path& x);

double qv_identity_gap(const Path& x);

/// Finite-window difference quotient of the quadratic variation:
/// a_hat(t_k) = (<x>_k - <x>_{k-w}) / (t_k - t_{k-w}) for k >= w.
/// Indices k < w use the forward window [t_k, t_{k+w}] and are burn-in.
MatrixPath qv_density(const Path& x, std::size_t window);

std::size_t default_qv_window(std::size_t steps);  // ceil(sqrt(N))

/// Tanaka local time at a level, d = 1 paths, sgn(0) := 0:
/// L_t = (|x_t - a| - |x_0 - a| - int sgn(x - a) dx) / 2.
Path local_time(const Path& x, double level);

/// Convergence diagnostic for the pathwise second-order expansion:
/// max_k |f(x_k) - f(x_0) - sum f'(x_j) dx_j - 1/2 sum f''(x_j) (H^T a_hat H)_j dt_j|
/// for a scalar path x = A + int H dB.
double ito_residual(const std::function<double(double)>& f,
                    const std::function<double(double)>& df,
                    const std::function<double(double)>& d2f, const Path& x,
                    const Integrand& h, const MatrixPath& a_hat);

struct GirsanovResult {
  PathEnsemble tilted;             // paths W - int phi ds, weights Z_T / sum Z_T
  std::vector<double> z_terminal;  // raw Z_T per path (0 where excluded)
  std::size_t overflow_count = 0;  // nonfinite Z_T, excluded from weights
};

/// Exponential reweighting Z_T = exp(int phi dW - 1/2 int |phi|^2 ds) of a
/// Brownian ensemble, with the drift-removed paths attached.
GirsanovResult girsanov_weights(const Integrand& phi, const PathEnsemble& w);

/// Perturb-and-compare adaptedness check: evaluations at each k must be
/// invariant under any modification of the path strictly after t_k.
bool is_adapted(const Integrand& h, const Path& x, std::uint64_t seed,
                std::size_t trials = 8);

}  // namespace qsa
