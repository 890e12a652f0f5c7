#include "qsa/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsa {

// ---------------------------------------------------------------------------
// GeneratorCoefficient

GeneratorCoefficient GeneratorCoefficient::constant(SpdMatrix m) {
  GeneratorCoefficient g;
  g.kind_ = Kind::PiecewiseConstant;
  g.dim_ = m.dim();
  g.breaks_ = {0.0};
  g.pieces_.push_back(std::move(m));
  return g;
}

GeneratorCoefficient GeneratorCoefficient::piecewise_constant(
    std::vector<double> breakpoints, std::vector<SpdMatrix> pieces) {
  if (breakpoints.empty() || breakpoints.size() != pieces.size())
    throw std::invalid_argument("generator: breakpoints/pieces size mismatch");
  if (breakpoints.front() != 0.0)
    throw std::invalid_argument("generator: breakpoints must start at 0");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i + 1] > breakpoints[i]))
      throw std::invalid_argument("generator: breakpoints must be strictly increasing");
  const std::size_t d = pieces.front().dim();
  for (const SpdMatrix& m : pieces)
    if (m.dim() != d) throw std::invalid_argument("generator: piece dimensions differ");
  GeneratorCoefficient g;
  g.kind_ = Kind::PiecewiseConstant;
  g.dim_ = d;
  g.breaks_ = std::move(breakpoints);
  g.pieces_ = std::move(pieces);
  return g;
}

GeneratorCoefficient GeneratorCoefficient::piecewise_constant_rational(
    std::size_t dim, std::vector<Rational> breakpoints,
    std::vector<std::vector<Rational>> pieces) {
  std::vector<double> breaks(breakpoints.size());
  for (std::size_t i = 0; i < breakpoints.size(); ++i) breaks[i] = breakpoints[i].value();
  std::vector<SpdMatrix> mats;
  mats.reserve(pieces.size());
  for (const auto& entries : pieces) {
    if (entries.size() != dim * dim)
      throw std::invalid_argument("generator: rational piece has wrong entry count");
    std::vector<double> m(dim * dim);
    for (std::size_t v = 0; v < m.size(); ++v) m[v] = entries[v].value();
    mats.emplace_back(dim, std::move(m));
  }
  GeneratorCoefficient g = piecewise_constant(std::move(breaks), std::move(mats));
  g.rational_breaks_ = std::move(breakpoints);
  g.rational_pieces_ = std::move(pieces);
  return g;
}

GeneratorCoefficient GeneratorCoefficient::rule(std::size_t dim, RuleFn fn,
                                                double lipschitz, std::string name) {
  GeneratorCoefficient g;
  g.kind_ = Kind::Rule;
  g.dim_ = dim;
  g.rule_ = std::move(fn);
  g.lipschitz_ = lipschitz;
  g.name_ = std::move(name);
  return g;
}

const SpdMatrix* GeneratorCoefficient::piece_at(double t) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  const auto idx = static_cast<std::size_t>(it - breaks_.begin());
  return &pieces_[idx == 0 ? 0 : idx - 1];
}

SpdMatrix GeneratorCoefficient::value(const Path& x, std::size_t k) const {
  if (kind_ == Kind::PiecewiseConstant) return *piece_at(x.grid().time(k));
  return rule_(x, k);
}

GeneratorCoefficient concatenate(const GeneratorCoefficient& a,
                                 const GeneratorCoefficient& b, double t) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("concatenate: dimension mismatch");
  if (t < 0.0) throw std::invalid_argument("concatenate: negative switch time");
  if (a.deterministic() && b.deterministic()) {
    if (t == 0.0) return b;
    std::vector<double> breaks;
    std::vector<SpdMatrix> pieces;
    for (std::size_t i = 0; i < a.breakpoints().size() && a.breakpoints()[i] < t; ++i) {
      breaks.push_back(a.breakpoints()[i]);
      pieces.push_back(a.pieces()[i]);
    }
    breaks.push_back(t);
    pieces.push_back(*b.piece_at(t));
    for (std::size_t i = 0; i < b.breakpoints().size(); ++i) {
      if (b.breakpoints()[i] > t) {
        breaks.push_back(b.breakpoints()[i]);
        pieces.push_back(b.pieces()[i]);
      }
    }
    return GeneratorCoefficient::piecewise_constant(std::move(breaks), std::move(pieces));
  }
  const double lip = std::max(a.lipschitz_constant(), b.lipschitz_constant());
  auto fn = [a, b, t](const Path& x, std::size_t k) {
    return x.grid().time(k) < t ? a.value(x, k) : b.value(x, k);
  };
  return GeneratorCoefficient::rule(a.dim(), std::move(fn), lip,
                                    "concat(" + a.name() + "," + b.name() + ")");
}

GeneratorCoefficient concatenate(const GeneratorCoefficient& a,
                                 const GeneratorCoefficient& b, Rational t) {
  GeneratorCoefficient g = concatenate(a, b, t.value());
  if (a.rational() && b.rational() && g.deterministic()) {
    std::vector<Rational> breaks;
    std::vector<std::vector<Rational>> pieces;
    if (t.value() == 0.0) return b;
    for (std::size_t i = 0;
         i < a.rational_breakpoints().size() && a.rational_breakpoints()[i] < t; ++i) {
      breaks.push_back(a.rational_breakpoints()[i]);
      pieces.push_back(a.rational_pieces()[i]);
    }
    breaks.push_back(t);
    std::size_t active = 0;
    for (std::size_t i = 0; i < b.rational_breakpoints().size(); ++i)
      if (!(t < b.rational_breakpoints()[i])) active = i;
    pieces.push_back(b.rational_pieces()[active]);
    for (std::size_t i = 0; i < b.rational_breakpoints().size(); ++i) {
      if (t < b.rational_breakpoints()[i]) {
        breaks.push_back(b.rational_breakpoints()[i]);
        pieces.push_back(b.rational_pieces()[i]);
      }
    }
    return GeneratorCoefficient::piecewise_constant_rational(a.dim(), std::move(breaks),
                                                             std::move(pieces));
  }
  return g;
}

// ---------------------------------------------------------------------------
// StoppingRule / PartitionEvent

bool StoppingRule::triggered_at(const Path& x, std::size_t k) const {
  switch (kind) {
    case Kind::FixedTime:
      return x.grid().time(k) >= time;
    case Kind::HitAbove:
      return x.at(k, coord) >= level;
    case Kind::HitBelow:
      return x.at(k, coord) <= level;
    case Kind::HitAbs:
      return std::abs(x.at(k, coord)) >= level;
  }
  return false;
}

std::size_t StoppingRule::first_trigger(const Path& x, std::size_t from) const {
  for (std::size_t k = from; k < x.points(); ++k)
    if (triggered_at(x, k)) return k;
  return npos;
}

std::vector<double> StoppingRule::value_set(const Grid& g) const {
  if (kind == Kind::FixedTime) return {time};
  std::vector<double> vs = g.times();
  vs.push_back(kInfiniteTime);
  return vs;
}

PartitionEvent PartitionEvent::coord_ge(std::size_t c, double v, std::string id) {
  return {Kind::CoordGe, c, v, id.empty() ? "coord_ge" : std::move(id)};
}
PartitionEvent PartitionEvent::coord_lt(std::size_t c, double v, std::string id) {
  return {Kind::CoordLt, c, v, id.empty() ? "coord_lt" : std::move(id)};
}
PartitionEvent PartitionEvent::abs_ge(std::size_t c, double v, std::string id) {
  return {Kind::AbsGe, c, v, id.empty() ? "abs_ge" : std::move(id)};
}
PartitionEvent PartitionEvent::abs_lt(std::size_t c, double v, std::string id) {
  return {Kind::AbsLt, c, v, id.empty() ? "abs_lt" : std::move(id)};
}

bool PartitionEvent::matches(const Path& x, std::size_t tau_index) const {
  switch (kind) {
    case Kind::Always:
      return true;
    case Kind::CoordGe:
      return x.at(tau_index, coord) >= value;
    case Kind::CoordLt:
      return x.at(tau_index, coord) < value;
    case Kind::AbsGe:
      return std::abs(x.at(tau_index, coord)) >= value;
    case Kind::AbsLt:
      return std::abs(x.at(tau_index, coord)) < value;
  }
  return false;
}

// ---------------------------------------------------------------------------
// SeparableCoefficient

CoefficientCursor::CoefficientCursor(const SeparableCoefficient& coeff, const Path& x,
                                     CoefficientTrace* trace)
    : coeff_(coeff),
      x_(x),
      scratch_(std::make_shared<std::vector<SpdMatrix>>()),
      trace_(trace) {
  if (x.dim() != coeff.dim())
    throw std::invalid_argument("coefficient: path dimension mismatch");
  scratch_->reserve(x.points());  // pointer stability for rule values
  if (trace_) {
    trace_->scratch = scratch_;
    trace_->at.reserve(x.points());
  }
  activate(0, 0);
  next_level_ = 1;
}

const SpdMatrix* CoefficientCursor::at(std::size_t k) {
  bool switched = false;
  while (next_level_ < coeff_.levels().size()) {
    const StoppingRule& stop = coeff_.levels()[next_level_].stop;
    // Strict increase of realized stopping times: a rule whose condition
    // already holds at tau_n fires at the next grid point (round-up).
    const bool trig = k > last_tau_ && stop.triggered_at(x_, k);
    if (!trig) break;
    activate(next_level_, k);
    ++next_level_;
    switched = true;
  }
  const bool pwc = active_->kind() == GeneratorCoefficient::Kind::PiecewiseConstant;
  const SpdMatrix* v = value_at(k);
  // Switches are discontinuities: level changes and piecewise-constant
  // breakpoints. Rule values evolve continuously and are not switches.
  if (pwc && v != prev_pwc_piece_ && prev_pwc_piece_ != nullptr) switched = true;
  prev_pwc_piece_ = pwc ? v : nullptr;
  if (trace_) {
    if (switched && k > 0) trace_->switches.push_back(k);
    trace_->at.push_back(v);
  }
  return v;
}

void CoefficientCursor::activate(std::size_t level, std::size_t k) {
  const auto& cases = coeff_.levels()[level].cases;
  std::size_t matches = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (cases[c].first.matches(x_, k)) {
      if (matches++ == 0) active_ = &cases[c].second;
    }
  }
  if (matches == 0)
    throw PartitionViolation("partition-violation: no event matches at level " +
                             std::to_string(level));
  if (matches > 1)
    throw PartitionViolation("partition-violation: events overlap at level " +
                             std::to_string(level));
  last_tau_ = k;
  if (trace_) trace_->level_starts.push_back(k);
}

const SpdMatrix* CoefficientCursor::value_at(std::size_t k) {
  if (active_->kind() == GeneratorCoefficient::Kind::PiecewiseConstant)
    return active_->piece_at(x_.grid().time(k));
  scratch_->push_back(active_->value(x_, k));
  return &scratch_->back();
}

bool SeparableCoefficient::deterministic() const {
  for (const CoefficientLevel& level : levels_) {
    if (level.stop.kind != StoppingRule::Kind::FixedTime) return false;
    if (level.cases.size() != 1) return false;
    if (level.cases.front().first.kind != PartitionEvent::Kind::Always) return false;
    if (!level.cases.front().second.deterministic()) return false;
  }
  return true;
}

CoefficientTrace SeparableCoefficient::trace(const Path& x) const {
  CoefficientTrace tr;
  CoefficientCursor cursor(*this, x, &tr);
  for (std::size_t k = 0; k < x.points(); ++k) cursor.at(k);
  return tr;
}

SpdMatrix SeparableCoefficient::evaluate(const Path& x, double t) const {
  const std::size_t k = x.grid().index_of(t);
  const CoefficientTrace tr = trace(x);
  return *tr.at[k];
}

SeparableCoefficient build_separable(std::vector<CoefficientLevel> levels,
                                     std::size_t dim, GridPtr grid, std::string name) {
  if (levels.empty()) throw std::invalid_argument("invalid-spec: no levels");
  const auto& first = levels.front().stop;
  if (first.kind != StoppingRule::Kind::FixedTime || first.time != 0.0)
    throw std::invalid_argument("invalid-spec: tau_0 must be the fixed time 0");
  double last_fixed = -1.0;
  for (const CoefficientLevel& level : levels) {
    if (level.cases.empty())
      throw std::invalid_argument("invalid-spec: level without events");
    if (level.stop.kind == StoppingRule::Kind::FixedTime) {
      if (!grid->contains(level.stop.time))
        throw std::invalid_argument("invalid-spec: stopping value not on grid");
      if (level.stop.time <= last_fixed)
        throw std::invalid_argument("invalid-spec: stopping times not increasing");
      last_fixed = level.stop.time;
    } else {
      last_fixed = -1.0;  // path-dependent ordering is checked at evaluation
    }
    for (const auto& [event, gen] : level.cases) {
      if (gen.dim() != dim)
        throw std::invalid_argument("invalid-spec: generator dimension mismatch");
      if (event.kind != PartitionEvent::Kind::Always && event.coord >= dim)
        throw std::invalid_argument("invalid-spec: event coordinate out of range");
    }
    if (level.stop.kind != StoppingRule::Kind::FixedTime && level.stop.coord >= dim)
      throw std::invalid_argument("invalid-spec: stopping coordinate out of range");
  }
  SeparableCoefficient c;
  c.levels_ = std::move(levels);
  c.dim_ = dim;
  c.grid_ = std::move(grid);
  c.name_ = std::move(name);
  return c;
}

SeparableCoefficient from_generator(GeneratorCoefficient g, GridPtr grid,
                                    std::string name) {
  if (name.empty()) name = g.name();
  std::vector<CoefficientLevel> levels(1);
  levels[0].stop = StoppingRule::fixed(0.0);
  levels[0].cases.emplace_back(PartitionEvent::always(), std::move(g));
  return build_separable(std::move(levels), levels[0].cases.front().second.dim(),
                         std::move(grid), std::move(name));
}

double default_disagreement_tol(double scale) { return 1e-12 * (1.0 + scale); }

namespace {

/// Both integrals advance by the left rule; the reported time is the last
/// grid point at which they still agree, which realizes
/// inf{t : int_0^t a != int_0^t b} exactly for piecewise constants.
template <class TraceA, class TraceB>
double disagreement_from_traces(const TraceA& ta, const TraceB& tb, const Grid& g,
                                std::size_t dim, double tol) {
  std::vector<double> ia(dim * dim, 0.0), ib(dim * dim, 0.0);
  for (std::size_t k = 0; k + 1 < g.points(); ++k) {
    const double dt = g.step(k);
    const SpdMatrix* ma = ta[k];
    const SpdMatrix* mb = tb[k];
    double gap = 0.0;
    for (std::size_t v = 0; v < ia.size(); ++v) {
      ia[v] += ma->data()[v] * dt;
      ib[v] += mb->data()[v] * dt;
      gap = std::max(gap, std::abs(ia[v] - ib[v]));
    }
    if (gap > tol) return g.time(k);
  }
  return kInfiniteTime;
}

std::vector<const SpdMatrix*> generator_trace(const GeneratorCoefficient& g,
                                              const Path& x,
                                              std::vector<SpdMatrix>& scratch) {
  std::vector<const SpdMatrix*> at(x.points());
  scratch.reserve(scratch.size() + x.points());
  for (std::size_t k = 0; k < x.points(); ++k) {
    if (g.kind() == GeneratorCoefficient::Kind::PiecewiseConstant) {
      at[k] = g.piece_at(x.grid().time(k));
    } else {
      scratch.push_back(g.value(x, k));
      at[k] = &scratch.back();
    }
  }
  return at;
}

}  // namespace

double disagreement_time(const SeparableCoefficient& a, const SeparableCoefficient& b,
                         const Path& x, double tol) {
  const CoefficientTrace ta = a.trace(x);
  const CoefficientTrace tb = b.trace(x);
  return disagreement_from_traces(ta.at, tb.at, x.grid(), a.dim(), tol);
}

double disagreement_time(const GeneratorCoefficient& a, const GeneratorCoefficient& b,
                         const Path& x, double tol) {
  std::vector<SpdMatrix> sa, sb;
  sa.reserve(x.points());
  sb.reserve(x.points());
  const auto ta = generator_trace(a, x, sa);
  const auto tb = generator_trace(b, x, sb);
  return disagreement_from_traces(ta, tb, x.grid(), a.dim(), tol);
}

GeneratingClassReport check_generating_class(
    std::span<const GeneratorCoefficient> generators, const PathEnsemble& probes,
    double tol) {
  if (generators.empty())
    throw std::invalid_argument("check_generating_class: empty generator list");
  probes.validate();
  GeneratingClassReport report;

  // (ii) constant disagreement times across all probe paths.
  for (std::size_t i = 0; i < generators.size(); ++i) {
    for (std::size_t j = i + 1; j < generators.size(); ++j) {
      GeneratingClassPairReport pr;
      pr.a = i;
      pr.b = j;
      pr.empirical_only = !generators[i].deterministic() || !generators[j].deterministic();
      double lo = kInfiniteTime, hi = -kInfiniteTime;
      bool any_finite = false, any_infinite = false;
      for (const Path& x : probes.paths) {
        const double th = disagreement_time(generators[i], generators[j], x, tol);
        if (std::isinf(th)) {
          any_infinite = true;
        } else {
          any_finite = true;
          lo = std::min(lo, th);
          hi = std::max(hi, th);
        }
      }
      if (!any_finite) {
        pr.theta_min = pr.theta_max = kInfiniteTime;
        pr.constant_theta = true;
      } else {
        pr.theta_min = lo;
        pr.theta_max = hi;
        pr.constant_theta = !any_infinite && hi - lo == 0.0;
      }
      report.pairs.push_back(pr);
    }
  }

  // (i) concatenation closure witnessed on sampled (a, b, t) triples.
  const Grid& g = probes.grid();
  const std::size_t n = g.steps();
  const std::size_t stride = std::max<std::size_t>(1, n / 64);
  const std::size_t probe_count = std::min<std::size_t>(probes.size(), 4);
  double mismatch = 0.0;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    for (std::size_t j = 0; j < generators.size(); ++j) {
      for (const double t : {g.time(n / 3), g.time(n / 2), g.time(2 * n / 3)}) {
        const GeneratorCoefficient c = concatenate(generators[i], generators[j], t);
        for (std::size_t p = 0; p < probe_count; ++p) {
          const Path& x = probes.paths[p];
          for (std::size_t k = 0; k < x.points(); k += stride) {
            const SpdMatrix ref =
                x.grid().time(k) < t ? generators[i].value(x, k) : generators[j].value(x, k);
            const SpdMatrix got = c.value(x, k);
            for (std::size_t v = 0; v < ref.data().size(); ++v)
              mismatch = std::max(mismatch, std::abs(ref.data()[v] - got.data()[v]));
          }
        }
      }
    }
  }
  report.max_concat_mismatch = mismatch;
  report.concatenation_closed = mismatch == 0.0;

  report.pass = report.concatenation_closed;
  for (const auto& pr : report.pairs)
    if (!pr.constant_theta) report.pass = false;
  return report;
}

}  // namespace qsa
