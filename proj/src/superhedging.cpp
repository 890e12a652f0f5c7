#include "qsa/superhedging.hpp"

#include <algorithm>
#include <cmath>

#include "qsa/measures.hpp"
#include "qsa/parallel.hpp"
#include "qsa/rng.hpp"
#include "qsa/stats.hpp"

namespace qsa {

Payoff call_payoff(double strike) {
  return {"call(" + std::to_string(strike) + ")",
          [strike](double s) { return std::max(s - strike, 0.0); }, true};
}

Payoff put_payoff(double strike) {
  return {"put(" + std::to_string(strike) + ")",
          [strike](double s) { return std::max(strike - s, 0.0); }, true};
}

Payoff butterfly_payoff(double k_lo, double k_mid, double k_hi) {
  if (!(k_lo < k_mid && k_mid < k_hi))
    throw std::invalid_argument("butterfly: strikes must be increasing");
  return {"butterfly", [k_lo, k_mid, k_hi](double s) {
            return std::max(s - k_lo, 0.0) - 2.0 * std::max(s - k_mid, 0.0) +
                   std::max(s - k_hi, 0.0);
          },
          true};
}

Payoff constant_payoff(double value) {
  if (value < 0.0) throw std::invalid_argument("payoff: claims are nonnegative");
  return {"constant", [value](double) { return value; }, true};
}

// ---------------------------------------------------------------------------
// Lattice

VolLattice::VolLattice(double s0, double horizon, std::size_t steps,
                       std::vector<double> sigmas, double spacing_factor)
    : s0_(s0), horizon_(horizon), steps_(steps), sigmas_(std::move(sigmas)) {
  if (!(s0 > 0.0) || !(horizon > 0.0) || steps < 1)
    throw std::invalid_argument("lattice: bad geometry");
  if (sigmas_.empty()) throw std::invalid_argument("lattice: empty coefficient set");
  double sigma_max = 0.0;
  for (double s : sigmas_) {
    if (!(s > 0.0)) throw std::invalid_argument("lattice: sigmas must be positive");
    sigma_max = std::max(sigma_max, s);
  }
  dt_ = horizon_ / static_cast<double>(steps_);
  dx_ = sigma_max * std::sqrt(spacing_factor * dt_);
  branches_.reserve(sigmas_.size());
  for (double s : sigmas_) {
    const double m = -0.5 * s * s * dt_;
    const double v = s * s * dt_;
    Branch b;
    b.mean = m;
    b.pu = 0.5 * ((v + m * m) / (dx_ * dx_) + m / dx_);
    b.pd = 0.5 * ((v + m * m) / (dx_ * dx_) - m / dx_);
    b.pm = 1.0 - b.pu - b.pd;
    if (b.pu < 0.0 || b.pd < 0.0 || b.pm < 0.0)
      throw std::invalid_argument("lattice: branch probabilities out of range");
    branches_.push_back(b);
  }
}

double VolLattice::spot(long j) const {
  return s0_ * std::exp(static_cast<double>(j) * dx_);
}

// ---------------------------------------------------------------------------
// Dynamic programming

ValueProcess dp_value(const VolLattice& lattice, const Payoff& payoff) {
  if (!payoff.markovian)
    throw std::invalid_argument("dp_value: lattice recursion needs a Markovian payoff");
  const std::size_t m = lattice.steps();
  ValueProcess vp;
  vp.lattice = &lattice;
  vp.value.resize(m + 1);
  vp.argmax.resize(m);
  for (std::size_t layer = 0; layer <= m; ++layer)
    vp.value[layer].assign(VolLattice::layer_size(layer), 0.0);
  for (std::size_t layer = 0; layer < m; ++layer)
    vp.argmax[layer].assign(VolLattice::layer_size(layer), 0);

  auto& terminal = vp.value[m];
  for (std::size_t idx = 0; idx < terminal.size(); ++idx) {
    const long j = static_cast<long>(idx) - static_cast<long>(m);
    const double v = payoff.terminal(lattice.spot(j));
    if (v < 0.0) throw std::invalid_argument("dp_value: claims are nonnegative");
    terminal[idx] = v;
  }

  const std::size_t n_sigma = lattice.sigmas().size();
  for (std::size_t layer = m; layer-- > 0;) {
    const auto& next = vp.value[layer + 1];
    auto& cur = vp.value[layer];
    auto& arg = vp.argmax[layer];
    parallel_for(cur.size(), [&](std::size_t idx) {
      // Children of offset j live at offsets j-1, j, j+1 in the next layer:
      // array indices idx, idx+1, idx+2.
      double best = -1.0;
      int best_sigma = 0;
      for (std::size_t s = 0; s < n_sigma; ++s) {
        const auto& b = lattice.branch(s);
        const double e = b.pd * next[idx] + b.pm * next[idx + 1] + b.pu * next[idx + 2];
        if (e > best) {
          best = e;
          best_sigma = static_cast<int>(s);
        }
      }
      cur[idx] = best;
      arg[idx] = best_sigma;
    });
  }
  return vp;
}

void extract_hedge(ValueProcess& vp) {
  const VolLattice& lattice = *vp.lattice;
  const std::size_t m = lattice.steps();
  vp.hedge.assign(m, {});
  vp.degenerate.assign(m, {});
  for (std::size_t layer = 0; layer < m; ++layer) {
    const auto& next = vp.value[layer + 1];
    auto& h = vp.hedge[layer];
    auto& flag = vp.degenerate[layer];
    h.assign(VolLattice::layer_size(layer), 0.0);
    flag.assign(h.size(), 0);
    for (std::size_t idx = 0; idx < h.size(); ++idx) {
      const long j = static_cast<long>(idx) - static_cast<long>(layer);
      const double s_up = lattice.spot(j + 1);
      const double s_dn = lattice.spot(j - 1);
      if (std::abs(s_up - s_dn) < 1e-14 * lattice.s0()) {
        flag[idx] = 1;  // degenerate branching: zero hedge, flagged
        continue;
      }
      h[idx] = (next[idx + 2] - next[idx]) / (s_up - s_dn);
    }
  }
}

DoobMeyerResult doob_meyer_on_lattice(const ValueProcess& vp, std::size_t sigma_index) {
  const VolLattice& lattice = *vp.lattice;
  const std::size_t m = lattice.steps();
  const auto& b = lattice.branch(sigma_index);
  DoobMeyerResult res;
  res.dk.resize(m);
  res.min_dk = 0.0;
  res.k_identically_zero = true;
  for (std::size_t layer = 0; layer < m; ++layer) {
    const auto& next = vp.value[layer + 1];
    const auto& cur = vp.value[layer];
    auto& dk = res.dk[layer];
    dk.assign(cur.size(), 0.0);
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
      const double expected =
          b.pd * next[idx] + b.pm * next[idx + 1] + b.pu * next[idx + 2];
      const double inc = cur[idx] - expected;
      if (inc < -1e-12)
        throw std::runtime_error(
            "doob_meyer_on_lattice: internal-error, negative compensator increment");
      dk[idx] = inc;
      res.min_dk = std::min(res.min_dk, inc);
      if (inc > 1e-12) res.k_identically_zero = false;
      // dM(child) = V(child) - V(node) + dK(node); conditional mean must vanish.
      const double cond_mean =
          b.pd * (next[idx] - cur[idx] + inc) + b.pm * (next[idx + 1] - cur[idx] + inc) +
          b.pu * (next[idx + 2] - cur[idx] + inc);
      res.max_conditional_mean_m =
          std::max(res.max_conditional_mean_m, std::abs(cond_mean));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Black-Scholes-Barenblatt finite differences

namespace detail {

template <class Sweep>
BsbFdResult bsb_fd_with(const Payoff& payoff, double sigma_lo, double sigma_hi,
                        double s0, double horizon, std::size_t space_nodes,
                        std::size_t time_steps, double s_max_mult, Sweep&& sweep) {
  if (!(0.0 < sigma_lo && sigma_lo <= sigma_hi))
    throw std::invalid_argument("bsb_fd_price: need 0 < sigma_lo <= sigma_hi");
  if (!payoff.markovian)
    throw std::invalid_argument("bsb_fd_price: payoff must be a function of terminal spot");
  if (space_nodes < 8) throw std::invalid_argument("bsb_fd_price: grid too coarse");
  if (time_steps < 1) time_steps = 1;

  const double s_max = s0 * s_max_mult;
  const double ds = s_max / static_cast<double>(space_nodes - 1);

  BsbFdResult res;
  // Explicit scheme stability at the largest spot and volatility.
  const double cfl_dt = ds * ds / (sigma_hi * sigma_hi * s_max * s_max);
  std::size_t steps = time_steps;
  if (horizon / static_cast<double>(steps) > cfl_dt) {
    steps = static_cast<std::size_t>(std::ceil(horizon / cfl_dt));
    res.cfl_refined = true;
  }
  res.time_steps_used = steps;
  const double dt = horizon / static_cast<double>(steps);

  std::vector<double> v(space_nodes), next(space_nodes);
  for (std::size_t i = 0; i < space_nodes; ++i) {
    const double val = payoff.terminal(static_cast<double>(i) * ds);
    if (val < 0.0) throw std::invalid_argument("bsb_fd_price: claims are nonnegative");
    v[i] = val;
  }

  const double lo2 = sigma_lo * sigma_lo, hi2 = sigma_hi * sigma_hi;
  for (std::size_t step = 0; step < steps; ++step) {
    next.front() = v.front();  // S = 0 is absorbing
    next.back() = v.back();    // linear extrapolation: zero curvature
    sweep(space_nodes - 1, [&](std::size_t i) {
      if (i == 0) return;
      const double s = static_cast<double>(i) * ds;
      const double d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (ds * ds);
      const double sig2 = d2 >= 0.0 ? hi2 : lo2;  // pointwise Barenblatt sup
      next[i] = v[i] + dt * 0.5 * sig2 * s * s * d2;
    });
    v.swap(next);
  }

  // Linear interpolation at the initial spot.
  const double pos = s0 / ds;
  const auto i0 = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i0);
  res.value = (1.0 - w) * v[i0] + w * v[std::min(i0 + 1, space_nodes - 1)];
  return res;
}

}  // namespace detail

BsbFdResult bsb_fd_price(const Payoff& payoff, double sigma_lo, double sigma_hi,
                         double s0, double horizon, std::size_t space_nodes,
                         std::size_t time_steps, double s_max_mult) {
  return detail::bsb_fd_with(payoff, sigma_lo, sigma_hi, s0, horizon, space_nodes,
                             time_steps, s_max_mult,
                             [](std::size_t n, auto&& f) { parallel_for(n, f); });
}

BsbFdResult bsb_fd_price_serial(const Payoff& payoff, double sigma_lo, double sigma_hi,
                                double s0, double horizon, std::size_t space_nodes,
                                std::size_t time_steps, double s_max_mult) {
  return detail::bsb_fd_with(payoff, sigma_lo, sigma_hi, s0, horizon, space_nodes,
                             time_steps, s_max_mult,
                             [](std::size_t n, auto&& f) { serial_for(n, f); });
}

// ---------------------------------------------------------------------------
// Monte Carlo

McLowerBound mc_lower_bound(const Payoff& payoff,
                            std::span<const SeparableCoefficient> coefficients,
                            std::size_t n, double s0, std::uint64_t seed) {
  if (coefficients.empty())
    throw std::invalid_argument("mc_lower_bound: empty coefficient list");
  McLowerBound out;
  for (std::size_t c = 0; c < coefficients.size(); ++c) {
    if (coefficients[c].dim() != 1)
      throw std::invalid_argument("mc_lower_bound: scalar coefficients only");
    std::vector<double> payoffs(n, 0.0);
    MeasureSampler sampler{coefficients[c], seed, c * n};
    for_each_sample(sampler, n, [&](std::size_t i, const Path& x, const Path&) {
      double qv = 0.0;
      for (std::size_t k = 0; k + 1 < x.points(); ++k) {
        const double dx = x.value(k + 1) - x.value(k);
        qv += dx * dx;
      }
      const double terminal = s0 * std::exp(x.value(x.points() - 1) - 0.5 * qv);
      payoffs[i] = payoff.terminal(terminal);
    });
    out.means.push_back(mean(payoffs));
    out.ses.push_back(standard_error(payoffs));
  }
  out.argmax = 0;
  for (std::size_t c = 1; c < out.means.size(); ++c)
    if (out.means[c] > out.means[out.argmax]) out.argmax = c;
  out.best_mean = out.means[out.argmax];
  out.best_se = out.ses[out.argmax];
  return out;
}

ShortfallReport verify_superhedge(double price,
                                  const std::function<double(double, double)>& hedge,
                                  const Payoff& payoff, std::span<const double> sigmas,
                                  std::size_t n, std::size_t steps, double horizon,
                                  double s0, double eps_frac, std::uint64_t seed,
                                  double max_fail) {
  ShortfallReport report;
  report.epsilon = eps_frac * std::abs(price);
  report.pass = true;
  const double dt = horizon / static_cast<double>(steps);
  const double sdt = std::sqrt(dt);
  for (std::size_t m = 0; m < sigmas.size(); ++m) {
    const double sigma = sigmas[m];
    std::vector<double> shortfall(n, 0.0);
    parallel_for(n, [&](std::size_t p) {
      NormalStream g(seed, (m << 32) + p);
      double s = s0;
      double wealth = price;
      for (std::size_t k = 0; k < steps; ++k) {
        const double h = hedge(static_cast<double>(k) * dt, s);
        const double z = g.next_normal();
        const double s_next = s * std::exp(sigma * sdt * z - 0.5 * sigma * sigma * dt);
        wealth += h * (s_next - s);
        s = s_next;
      }
      shortfall[p] = wealth - payoff.terminal(s);
    });
    MeasureShortfall ms;
    ms.sigma = sigma;
    ms.min_shortfall = *std::min_element(shortfall.begin(), shortfall.end());
    ms.p01_shortfall = percentile(shortfall, 0.01);
    std::size_t below = 0;
    for (double v : shortfall)
      if (v < -report.epsilon) ++below;
    ms.fraction_below = static_cast<double>(below) / static_cast<double>(n);
    ms.pass = ms.fraction_below <= max_fail;
    if (!ms.pass) report.pass = false;
    report.measures.push_back(ms);
  }
  return report;
}

}  // namespace qsa
