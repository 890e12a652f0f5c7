#include "qsa/calculus.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "qsa/rng.hpp"
#include "qsa/stats.hpp"

namespace qsa {

Integrand Integrand::constant(std::vector<double> row) {
  const std::size_t w = row.size();
  return Integrand(w, [row = std::move(row)](const Path&, std::size_t,
                                             std::span<double> out) {
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i];
  });
}

Integrand Integrand::zero(std::size_t width) {
  return Integrand(width, [](const Path&, std::size_t, std::span<double> out) {
    for (double& v : out) v = 0.0;
  });
}

Integrand Integrand::scalar(std::function<double(const Path&, std::size_t)> f) {
  return Integrand(1, [f = std::move(f)](const Path& x, std::size_t k,
                                         std::span<double> out) { out[0] = f(x, k); });
}

Path ito_integral(const Integrand& h, const Path& x) {
  if (h.width() != x.dim())
    throw std::invalid_argument("ito_integral: integrand width does not match path dimension");
  Path out(x.grid_ptr(), 1);
  std::vector<double> row(h.width());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    h.eval(x, k, row);
    double inc = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i)
      inc += row[i] * (x.at(k + 1, i) - x.at(k, i));
    acc += inc;
    out.value(k + 1) = acc;
  }
  return out;
}

MatrixPath quadratic_variation(const Path& x) {
  const std::size_t d = x.dim();
  MatrixPath qv(x.grid_ptr(), d);
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const double dxi = x.at(k + 1, i) - x.at(k, i);
      for (std::size_t j = 0; j < d; ++j) {
        const double dxj = x.at(k + 1, j) - x.at(k, j);
        qv.at(k + 1, i, j) = qv.at(k, i, j) + dxi * dxj;
      }
    }
  }
  return qv;
}

MatrixPath quadratic_variation_identity(const Path& x) {
  const std::size_t d = x.dim();
  MatrixPath qv(x.grid_ptr(), d);
  // Symmetrized running integral sum Sym(x_k dx_k^T), subtracted from x x^T.
  std::vector<double> integral(d * d, 0.0);
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const double dxi = x.at(k + 1, i) - x.at(k, i);
      for (std::size_t j = 0; j < d; ++j) {
        const double dxj = x.at(k + 1, j) - x.at(k, j);
        integral[i * d + j] += 0.5 * (x.at(k, i) * dxj + x.at(k, j) * dxi);
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        qv.at(k + 1, i, j) =
            x.at(k + 1, i) * x.at(k + 1, j) - x.at(0, i) * x.at(0, j) -
            2.0 * integral[i * d + j];
  }
  return qv;
}

double qv_identity_gap(const Path& x) {
  const MatrixPath direct = quadratic_variation(x);
  const MatrixPath identity = quadratic_variation_identity(x);
  double gap = 0.0;
  for (std::size_t v = 0; v < direct.values.size(); ++v)
    gap = std::max(gap, std::abs(direct.values[v] - identity.values[v]));
  return gap;
}

std::size_t default_qv_window(std::size_t steps) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(steps))));
}

MatrixPath qv_density(const Path& x, std::size_t window) {
  const std::size_t n = x.steps();
  if (window < 1 || window > n)
    throw std::invalid_argument("qv_density: window must be in [1, N]");
  const MatrixPath qv = quadratic_variation(x);
  const std::size_t d = x.dim();
  MatrixPath out(x.grid_ptr(), d);
  for (std::size_t k = 0; k <= n; ++k) {
    std::size_t lo, hi;
    if (k >= window) {           // trailing window
      lo = k - window;
      hi = k;
    } else {                     // burn-in: forward window
      lo = k;
      hi = std::min(k + window, n);
    }
    const double span = x.grid().time(hi) - x.grid().time(lo);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out.at(k, i, j) = (qv.at(hi, i, j) - qv.at(lo, i, j)) / span;
  }
  return out;
}

Path local_time(const Path& x, double level) {
  if (x.dim() != 1)
    throw std::invalid_argument("local_time: unsupported dimension, need d = 1");
  const auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  Integrand h = Integrand::scalar(
      [level, sgn](const Path& p, std::size_t k) { return sgn(p.value(k) - level); });
  const Path integral = ito_integral(h, x);
  Path out(x.grid_ptr(), 1);
  const double base = std::abs(x.value(0) - level);
  for (std::size_t k = 0; k < x.points(); ++k)
    out.value(k) =
        0.5 * (std::abs(x.value(k) - level) - base - integral.value(k));
  return out;
}

double ito_residual(const std::function<double(double)>& f,
                    const std::function<double(double)>& df,
                    const std::function<double(double)>& d2f, const Path& x,
                    const Integrand& h, const MatrixPath& a_hat) {
  if (x.dim() != 1)
    throw std::invalid_argument("ito_residual: scalar paths only");
  const std::size_t d = h.width();
  if (a_hat.dim != d)
    throw std::invalid_argument("ito_residual: density dimension mismatch");
  std::vector<double> row(d);
  double expansion = f(x.value(0));
  double residual = 0.0;
  for (std::size_t k = 0; k + 1 < x.points(); ++k) {
    // First-order term through the path increment: dx = dA + H dB.
    expansion += df(x.value(k)) * (x.value(k + 1) - x.value(k));
    h.eval(x, k, row);
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        quad += row[i] * a_hat.at(k, i, j) * row[j];
    expansion += 0.5 * d2f(x.value(k)) * quad * x.grid().step(k);
    residual = std::max(residual, std::abs(f(x.value(k + 1)) - expansion));
  }
  return residual;
}

GirsanovResult girsanov_weights(const Integrand& phi, const PathEnsemble& w) {
  w.validate();
  const std::size_t d = w.paths.front().dim();
  if (phi.width() != d)
    throw std::invalid_argument("girsanov_weights: integrand width mismatch");

  GirsanovResult res;
  res.tilted.seed = w.seed;
  res.tilted.first_stream = w.first_stream;
  res.tilted.paths.reserve(w.size());
  res.z_terminal.assign(w.size(), 0.0);

  std::vector<double> raw(w.size(), 0.0);
  std::vector<double> row(d);
  for (std::size_t p = 0; p < w.size(); ++p) {
    const Path& path = w.paths[p];
    Path tilted(path.grid_ptr(), d);
    double mart = 0.0;   // int phi dW
    double comp = 0.0;   // int |phi|^2 ds
    std::vector<double> drift(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) tilted.at(0, i) = path.at(0, i);
    for (std::size_t k = 0; k + 1 < path.points(); ++k) {
      phi.eval(path, k, row);
      const double dt = path.grid().step(k);
      double n2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        mart += row[i] * (path.at(k + 1, i) - path.at(k, i));
        n2 += row[i] * row[i];
        drift[i] += row[i] * dt;
        tilted.at(k + 1, i) = path.at(k + 1, i) - drift[i];
      }
      comp += n2 * dt;
    }
    raw[p] = std::exp(mart - 0.5 * comp);
    res.tilted.paths.push_back(std::move(tilted));
  }

  double total = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    if (!std::isfinite(raw[p])) {
      ++res.overflow_count;
      raw[p] = 0.0;  // excluded, not clipped: exclusion is counted and visible
    }
    total += raw[p];
  }
  if (total <= 0.0) throw std::runtime_error("girsanov_weights: all weights excluded");
  res.tilted.weights.assign(w.size(), 0.0);
  for (std::size_t p = 0; p < w.size(); ++p) {
    res.tilted.weights[p] = raw[p] / total;
    res.z_terminal[p] = raw[p];
  }
  return res;
}

bool is_adapted(const Integrand& h, const Path& x, std::uint64_t seed,
                std::size_t trials) {
  std::vector<double> base(h.width()), perturbed(h.width());
  NormalStream g(seed, 0xADA7ull);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t k =
        static_cast<std::size_t>(g.next_uniform() * static_cast<double>(x.steps()));
    h.eval(x, k, base);
    Path y = x;
    for (std::size_t j = k + 1; j < y.points(); ++j)
      for (std::size_t i = 0; i < y.dim(); ++i)
        y.at(j, i) += 1.0 + g.next_normal();
    h.eval(y, k, perturbed);
    for (std::size_t i = 0; i < h.width(); ++i)
      if (base[i] != perturbed[i]) return false;
  }
  return true;
}

}  // namespace qsa
