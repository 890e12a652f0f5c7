#pragma once

#include <iosfwd>
#include <string>

#include "qsa/path.hpp"

namespace qsa {

/// CSV layout: header, then one row per path per time:
///   path_id,t,x_1,...,x_d
void write_ensemble_csv(const PathEnsemble& e, std::ostream& os);
void write_ensemble_csv(const PathEnsemble& e, const std::string& file);

/// Compact binary layout, little-endian throughout:
///   magic "QSPE", u32 version, u32 d, u64 N, u64 n, u64 seed, u64 first_stream,
///   then N+1 grid times, then n * (N+1) * d path values, then n weights,
///   all as 64-bit floats.
void write_ensemble_binary(const PathEnsemble& e, std::ostream& os);
void write_ensemble_binary(const PathEnsemble& e, const std::string& file);
PathEnsemble read_ensemble_binary(std::istream& is);
PathEnsemble read_ensemble_binary(const std::string& file);

}  // namespace qsa
