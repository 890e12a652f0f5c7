#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qsa/calculus.hpp"
#include "qsa/path.hpp"
#include "qsa/spd.hpp"

namespace qsa {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// No partition event matched a sampled path at some level.
struct PartitionViolation : std::runtime_error {
  explicit PartitionViolation(const std::string& what) : std::runtime_error(what) {}
};

/// A generator: either a deterministic piecewise-constant-in-time coefficient
/// (optionally on a rational grid) or an adapted matrix-valued rule with a
/// declared Lipschitz constant.
class GeneratorCoefficient {
 public:
  enum class Kind { PiecewiseConstant, Rule };
  using RuleFn = std::function<SpdMatrix(const Path&, std::size_t)>;

  static GeneratorCoefficient constant(SpdMatrix m);
  static GeneratorCoefficient piecewise_constant(std::vector<double> breakpoints,
                                                 std::vector<SpdMatrix> pieces);
  static GeneratorCoefficient piecewise_constant_rational(
      std::size_t dim, std::vector<Rational> breakpoints,
      std::vector<std::vector<Rational>> pieces);
  static GeneratorCoefficient rule(std::size_t dim, RuleFn fn, double lipschitz,
                                   std::string name);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool deterministic() const { return kind_ == Kind::PiecewiseConstant; }
  bool rational() const { return !rational_breaks_.empty(); }
  double lipschitz_constant() const { return lipschitz_; }
  const std::string& name() const { return name_; }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<SpdMatrix>& pieces() const { return pieces_; }
  const std::vector<Rational>& rational_breakpoints() const { return rational_breaks_; }
  const std::vector<std::vector<Rational>>& rational_pieces() const {
    return rational_pieces_;
  }

  /// Value at (x|_[0,t_k], t_k). Piecewise-constant generators ignore the path.
  SpdMatrix value(const Path& x, std::size_t k) const;

  /// Piecewise-constant fast path: pointer to the active piece at time t.
  const SpdMatrix* piece_at(double t) const;

 private:
  Kind kind_ = Kind::PiecewiseConstant;
  std::size_t dim_ = 1;
  std::vector<double> breaks_;        // starts at 0, strictly increasing
  std::vector<SpdMatrix> pieces_;     // value on [breaks_[i], breaks_[i+1])
  std::vector<Rational> rational_breaks_;
  std::vector<std::vector<Rational>> rational_pieces_;
  RuleFn rule_;
  double lipschitz_ = 0.0;
  std::string name_;
};

/// a 1_[0,t) + b 1_[t,inf). Piecewise-constant inputs merge into a
/// piecewise-constant output; the rational overload preserves rational grids.
GeneratorCoefficient concatenate(const GeneratorCoefficient& a,
                                 const GeneratorCoefficient& b, double t);
GeneratorCoefficient concatenate(const GeneratorCoefficient& a,
                                 const GeneratorCoefficient& b, Rational t);

/// Stopping rule with a finite, grid-valued set of realizable values.
/// {tau <= t} is computable from the path restricted to [0, t].
struct StoppingRule {
  enum class Kind { FixedTime, HitAbove, HitBelow, HitAbs };
  Kind kind = Kind::FixedTime;
  double time = 0.0;        // FixedTime
  std::size_t coord = 0;    // hitting rules
  double level = 0.0;

  static StoppingRule fixed(double t) { return {Kind::FixedTime, t, 0, 0.0}; }
  static StoppingRule hit_above(std::size_t coord, double level) {
    return {Kind::HitAbove, 0.0, coord, level};
  }
  static StoppingRule hit_below(std::size_t coord, double level) {
    return {Kind::HitBelow, 0.0, coord, level};
  }
  static StoppingRule hit_abs(std::size_t coord, double level) {
    return {Kind::HitAbs, 0.0, coord, level};
  }

  bool triggered_at(const Path& x, std::size_t k) const;
  /// First grid index >= from with the rule triggered, or npos (= infinity).
  std::size_t first_trigger(const Path& x, std::size_t from) const;
  /// Declared finite value set on a grid (grid times, plus infinity).
  std::vector<double> value_set(const Grid& g) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Partition events from a fixed predicate vocabulary, evaluated on the path
/// restricted to [0, tau].
struct PartitionEvent {
  enum class Kind { Always, CoordGe, CoordLt, AbsGe, AbsLt };
  Kind kind = Kind::Always;
  std::size_t coord = 0;
  double value = 0.0;
  std::string id = "always";

  static PartitionEvent always() { return {}; }
  static PartitionEvent coord_ge(std::size_t c, double v, std::string id = "");
  static PartitionEvent coord_lt(std::size_t c, double v, std::string id = "");
  static PartitionEvent abs_ge(std::size_t c, double v, std::string id = "");
  static PartitionEvent abs_lt(std::size_t c, double v, std::string id = "");

  bool matches(const Path& x, std::size_t tau_index) const;
};

struct CoefficientLevel {
  StoppingRule stop;  // tau_n; level 0 must start at time 0
  std::vector<std::pair<PartitionEvent, GeneratorCoefficient>> cases;
};

/// Coefficient trajectory along one path: the active SPD value per grid
/// index, plus where pieces or levels switched (jump windows for estimators).
struct CoefficientTrace {
  std::vector<const SpdMatrix*> at;       // per grid index
  std::vector<std::size_t> switches;      // indices where the value changed
  std::vector<std::size_t> level_starts;  // realized tau_n as grid indices
  std::shared_ptr<std::vector<SpdMatrix>> scratch;  // storage for rule values
};

/// Separable coefficient: levels (tau_n, {(E^n_i, a^n_i)}) assembled over
/// stopping times and partition events, evaluating to an SPD matrix at every
/// grid time on every sampled path.
class SeparableCoefficient {
 public:
  SeparableCoefficient() = default;

  std::size_t dim() const { return dim_; }
  const GridPtr& grid() const { return grid_; }
  const std::vector<CoefficientLevel>& levels() const { return levels_; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  /// True when every generator is deterministic and every level is a fixed
  /// time with a single always-event; evaluation is then path-independent.
  bool deterministic() const;

  CoefficientTrace trace(const Path& x) const;
  SpdMatrix evaluate(const Path& x, double t) const;

  friend SeparableCoefficient build_separable(std::vector<CoefficientLevel> levels,
                                              std::size_t dim, GridPtr grid,
                                              std::string name);

 private:
  std::vector<CoefficientLevel> levels_;
  std::size_t dim_ = 1;
  GridPtr grid_;
  std::string name_;
};

/// Validates and assembles a separable coefficient. Throws
/// std::invalid_argument ("invalid-spec") on a malformed level structure.
SeparableCoefficient build_separable(std::vector<CoefficientLevel> levels,
                                     std::size_t dim, GridPtr grid,
                                     std::string name = "");

/// Incremental walk of a coefficient's level structure along a path that may
/// still be under construction: at(k) must be called with k increasing, and
/// only once the path is final up to index k. Stopping rules and partition
/// events are read off the walked path itself, which is how strong solutions
/// evaluate their own coefficient.
class CoefficientCursor {
 public:
  CoefficientCursor(const SeparableCoefficient& coeff, const Path& x,
                    CoefficientTrace* trace = nullptr);

  const SpdMatrix* at(std::size_t k);

 private:
  void activate(std::size_t level, std::size_t k);
  const SpdMatrix* value_at(std::size_t k);

  const SeparableCoefficient& coeff_;
  const Path& x_;
  std::shared_ptr<std::vector<SpdMatrix>> scratch_;
  CoefficientTrace* trace_;
  const GeneratorCoefficient* active_ = nullptr;
  const SpdMatrix* prev_pwc_piece_ = nullptr;
  std::size_t next_level_ = 1;
  std::size_t last_tau_ = 0;
};

/// Single-level wrapper around one generator.
SeparableCoefficient from_generator(GeneratorCoefficient g, GridPtr grid,
                                    std::string name = "");

/// First disagreement time of the running integrals int a ds and int b ds
/// along a path (left-endpoint rule). Returns the last grid time at which the
/// integrals still agree entry-wise within tol -- the grid realization of
/// inf{t : int_0^t a != int_0^t b} -- or infinity when they never disagree.
double disagreement_time(const SeparableCoefficient& a, const SeparableCoefficient& b,
                         const Path& x, double tol);
double disagreement_time(const GeneratorCoefficient& a, const GeneratorCoefficient& b,
                         const Path& x, double tol);

double default_disagreement_tol(double scale);

struct GeneratingClassPairReport {
  std::size_t a = 0, b = 0;
  double theta_min = 0.0, theta_max = 0.0;
  bool constant_theta = false;
  bool empirical_only = false;  // Lipschitz rules: sampled evidence only
};

struct GeneratingClassReport {
  std::vector<GeneratingClassPairReport> pairs;
  bool concatenation_closed = false;
  double max_concat_mismatch = 0.0;
  bool pass = false;
};

/// Witnesses the two generating-class properties on probe paths:
/// concatenation closure on sampled (a, b, t) triples and constant
/// disagreement times for every pair.
GeneratingClassReport check_generating_class(
    std::span<const GeneratorCoefficient> generators, const PathEnsemble& probes,
    double tol = 0.0);

}  // namespace qsa
