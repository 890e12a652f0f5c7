#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsa/coefficients.hpp"
#include "qsa/grid.hpp"

namespace qsa {

/// Claim on the terminal spot; nonnegative by contract.
struct Payoff {
  std::string name;
  std::function<double(double)> terminal;
  bool markovian = true;
};

Payoff call_payoff(double strike);
Payoff put_payoff(double strike);
Payoff butterfly_payoff(double k_lo, double k_mid, double k_hi);
Payoff constant_payoff(double value);

/// Recombining trinomial lattice in log-spot coordinates, shared across the
/// finite volatility set: node spacing is sized by the largest sigma so all
/// coefficient choices branch on one node set. Per-sigma branch moments are
/// matched exactly: the driving Brownian increment has mean zero and
/// variance dt, i.e. the log increment has mean -sigma^2 dt / 2 and variance
/// sigma^2 dt, which keeps the spot a martingale.
class VolLattice {
 public:
  struct Branch {
    double pu = 0.0, pm = 0.0, pd = 0.0;
    double mean = 0.0;  // log-increment mean, -sigma^2 dt / 2
  };

  VolLattice(double s0, double horizon, std::size_t steps, std::vector<double> sigmas,
             double spacing_factor = 1.5);

  double s0() const { return s0_; }
  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }
  double dx() const { return dx_; }
  const std::vector<double>& sigmas() const { return sigmas_; }
  const Branch& branch(std::size_t sigma_index) const { return branches_[sigma_index]; }

  /// Node offset j in [-m, m] at layer m; spot s0 * exp(j dx - mean-shift is
  /// carried by the branch probabilities, not the node set).
  double spot(long j) const;
  static std::size_t layer_size(std::size_t layer) { return 2 * layer + 1; }

 private:
  double s0_, horizon_, dt_, dx_;
  std::size_t steps_;
  std::vector<double> sigmas_;
  std::vector<Branch> branches_;
};

/// Node-indexed dynamic-programming value with per-node argmax coefficient,
/// hedge ratio, and Doob decomposition hooks.
struct ValueProcess {
  const VolLattice* lattice = nullptr;
  std::vector<std::vector<double>> value;    // [layer][node], layer 0..M
  std::vector<std::vector<int>> argmax;      // [layer][node], layers 0..M-1
  std::vector<std::vector<double>> hedge;    // filled by extract_hedge
  std::vector<std::vector<char>> degenerate; // equal child spots flag

  double root_value() const { return value.front().front(); }
};

/// Backward recursion V(node) = max over sigma of E_sigma[V(children)],
/// ties broken toward the lowest coefficient index.
ValueProcess dp_value(const VolLattice& lattice, const Payoff& payoff);

/// Discrete martingale-representation hedge: spread of child values over
/// spread of child spots under the argmax coefficient.
void extract_hedge(ValueProcess& vp);

struct DoobMeyerResult {
  std::vector<std::vector<double>> dk;  // [layer][node] >= 0 increments of K
  double min_dk = 0.0;
  double max_conditional_mean_m = 0.0;  // |E_sigma[dM]| over nodes, ~0
  bool k_identically_zero = false;
};

/// Doob decomposition of the value along one coefficient's measure:
/// dK(node) = V(node) - E_sigma[V(children)] >= 0 by the DP maximum;
/// dM = dV + dK has zero conditional mean. Throws on dK < -1e-12.
DoobMeyerResult doob_meyer_on_lattice(const ValueProcess& vp, std::size_t sigma_index);

struct BsbFdResult {
  double value = 0.0;
  std::size_t time_steps_used = 0;
  bool cfl_refined = false;
};

/// Explicit finite-difference solver for the nonlinear PDE
///   V_t + 1/2 sup_{sigma in [lo, hi]} sigma^2 S^2 V_SS = 0
/// with sigma chosen pointwise from the sign of the discrete second
/// difference. CFL violations auto-refine the time step. Boundaries: V is
/// frozen at S = 0 and linearly extrapolated at S_max.
BsbFdResult bsb_fd_price(const Payoff& payoff, double sigma_lo, double sigma_hi,
                         double s0, double horizon, std::size_t space_nodes,
                         std::size_t time_steps, double s_max_mult = 4.0);

/// Serial reference sweep for the same scheme (testing and benchmarks).
BsbFdResult bsb_fd_price_serial(const Payoff& payoff, double sigma_lo, double sigma_hi,
                                double s0, double horizon, std::size_t space_nodes,
                                std::size_t time_steps, double s_max_mult = 4.0);

struct McLowerBound {
  double best_mean = 0.0;
  double best_se = 0.0;
  std::size_t argmax = 0;
  std::vector<double> means;
  std::vector<double> ses;
};

/// Monte-Carlo mean of the payoff under each coefficient's measure; the max
/// is a lower bound for the supremum over the class. The spot is the
/// stochastic exponential s0 * exp(X_t - <X>_t / 2) of the canonical process.
McLowerBound mc_lower_bound(const Payoff& payoff,
                            std::span<const SeparableCoefficient> coefficients,
                            std::size_t n, double s0, std::uint64_t seed);

struct MeasureShortfall {
  double sigma = 0.0;
  double min_shortfall = 0.0;
  double p01_shortfall = 0.0;
  double fraction_below = 0.0;
  bool pass = false;
};

struct ShortfallReport {
  std::vector<MeasureShortfall> measures;
  double epsilon = 0.0;
  bool pass = false;  // quasi-sure: every measure passes
};

/// Simulates price + sum H dS - payoff per path under every constant-sigma
/// measure; passes when the fraction below -epsilon is at most `max_fail`
/// under each of them. The hedge is a rule (t, S) -> units, rebalanced at
/// every simulation step.
ShortfallReport verify_superhedge(double price,
                                  const std::function<double(double, double)>& hedge,
                                  const Payoff& payoff, std::span<const double> sigmas,
                                  std::size_t n, std::size_t steps, double horizon,
                                  double s0, double eps_frac, std::uint64_t seed,
                                  double max_fail = 0.01);

}  // namespace qsa
