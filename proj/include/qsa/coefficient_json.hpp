#pragma once

#include <json.hpp>

#include "qsa/coefficients.hpp"

namespace qsa {

/// Generator spec:
///   {"kind":"constant","d":1,"matrix":[2.0]}
///   {"kind":"pwc","d":1,"breakpoints":[0.0,1.0],"matrices":[[1.0],[3.0]]}
///   {"kind":"pwc_rational","d":1,"breakpoints":[[0,1],[1,2]],
///    "matrices":[[[1,1]],[[3,2]]]}           // entries as [num, den]
///   {"kind":"sin2","d":1,"base":1.0,"amplitude":0.5,"coord":0}
GeneratorCoefficient generator_from_json(const nlohmann::json& spec);

/// Separable coefficient spec: either a bare generator spec, or
///   {"d":1,"levels":[{"stop":{...},"cases":[{"event":{...},
///    "generator":{...}}, ...]}, ...]}
/// with stop kinds time/hit_above/hit_below/hit_abs and event kinds
/// always/coord_ge/coord_lt/abs_ge/abs_lt.
SeparableCoefficient coefficient_from_json(const nlohmann::json& spec, GridPtr grid);

}  // namespace qsa
