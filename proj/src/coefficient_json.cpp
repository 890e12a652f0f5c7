#include "qsa/coefficient_json.hpp"

#include <cmath>
#include <set>
#include <string>

namespace qsa {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument("coefficient spec: " + what);
}

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
}

std::vector<double> matrix_entries(const json& j, std::size_t d) {
  if (!j.is_array() || j.size() != d * d) bad("matrix needs d*d entries");
  std::vector<double> m;
  m.reserve(d * d);
  for (const auto& v : j) m.push_back(v.get<double>());
  return m;
}

Rational rational_entry(const json& j) {
  if (!j.is_array() || j.size() != 2) bad("rational entries are [num, den]");
  return Rational(j[0].get<long long>(), j[1].get<long long>());
}

StoppingRule stop_from_json(const json& j) {
  require_keys(j, {"kind", "t", "coord", "level"}, "stop");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "time") return StoppingRule::fixed(j.at("t").get<double>());
  const auto coord = j.value("coord", 0u);
  const double level = j.at("level").get<double>();
  if (kind == "hit_above") return StoppingRule::hit_above(coord, level);
  if (kind == "hit_below") return StoppingRule::hit_below(coord, level);
  if (kind == "hit_abs") return StoppingRule::hit_abs(coord, level);
  bad("unknown stop kind '" + kind + "'");
}

PartitionEvent event_from_json(const json& j) {
  require_keys(j, {"kind", "coord", "value", "id"}, "event");
  const std::string kind = j.at("kind").get<std::string>();
  const auto coord = j.value("coord", 0u);
  const double value = j.value("value", 0.0);
  const std::string id = j.value("id", std::string());
  if (kind == "always") return PartitionEvent::always();
  if (kind == "coord_ge") return PartitionEvent::coord_ge(coord, value, id);
  if (kind == "coord_lt") return PartitionEvent::coord_lt(coord, value, id);
  if (kind == "abs_ge") return PartitionEvent::abs_ge(coord, value, id);
  if (kind == "abs_lt") return PartitionEvent::abs_lt(coord, value, id);
  bad("unknown event kind '" + kind + "'");
}

}  // namespace

GeneratorCoefficient generator_from_json(const json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  const auto d = spec.value("d", 1u);
  if (kind == "constant") {
    require_keys(spec, {"kind", "d", "matrix"}, "generator");
    return GeneratorCoefficient::constant(SpdMatrix(d, matrix_entries(spec.at("matrix"), d)));
  }
  if (kind == "pwc") {
    require_keys(spec, {"kind", "d", "breakpoints", "matrices"}, "generator");
    std::vector<double> breaks = spec.at("breakpoints").get<std::vector<double>>();
    std::vector<SpdMatrix> mats;
    for (const auto& m : spec.at("matrices")) mats.emplace_back(d, matrix_entries(m, d));
    return GeneratorCoefficient::piecewise_constant(std::move(breaks), std::move(mats));
  }
  if (kind == "pwc_rational") {
    require_keys(spec, {"kind", "d", "breakpoints", "matrices"}, "generator");
    std::vector<Rational> breaks;
    for (const auto& b : spec.at("breakpoints")) breaks.push_back(rational_entry(b));
    std::vector<std::vector<Rational>> mats;
    for (const auto& m : spec.at("matrices")) {
      if (!m.is_array() || m.size() != d * d) bad("rational matrix needs d*d entries");
      std::vector<Rational> entries;
      for (const auto& e : m) entries.push_back(rational_entry(e));
      mats.push_back(std::move(entries));
    }
    return GeneratorCoefficient::piecewise_constant_rational(d, std::move(breaks),
                                                             std::move(mats));
  }
  if (kind == "sin2") {
    // a(t, x) = base + amplitude * sin^2(x_coord(t)); Lipschitz in the path.
    require_keys(spec, {"kind", "d", "base", "amplitude", "coord"}, "generator");
    const double base = spec.at("base").get<double>();
    const double amp = spec.at("amplitude").get<double>();
    const auto coord = spec.value("coord", 0u);
    if (!(base > 0.0) || base + amp <= 0.0) bad("sin2 values must stay positive");
    if (d != 1) bad("sin2 rule is scalar");
    auto fn = [base, amp, coord](const Path& x, std::size_t k) {
      const double s = std::sin(x.at(k, coord));
      return SpdMatrix::scalar(base + amp * s * s);
    };
    return GeneratorCoefficient::rule(1, std::move(fn), std::abs(amp), "sin2");
  }
  bad("unknown generator kind '" + kind + "'");
}

SeparableCoefficient coefficient_from_json(const json& spec, GridPtr grid) {
  if (spec.contains("kind"))
    return from_generator(generator_from_json(spec), std::move(grid));
  require_keys(spec, {"d", "levels", "name"}, "coefficient");
  const auto d = spec.value("d", 1u);
  std::vector<CoefficientLevel> levels;
  for (const auto& lj : spec.at("levels")) {
    require_keys(lj, {"stop", "cases"}, "level");
    CoefficientLevel level;
    level.stop = stop_from_json(lj.at("stop"));
    for (const auto& cj : lj.at("cases")) {
      require_keys(cj, {"event", "generator"}, "case");
      level.cases.emplace_back(event_from_json(cj.at("event")),
                               generator_from_json(cj.at("generator")));
    }
    levels.push_back(std::move(level));
  }
  return build_separable(std::move(levels), d, std::move(grid),
                         spec.value("name", std::string()));
}

}  // namespace qsa
