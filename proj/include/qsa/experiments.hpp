#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace qsa {

/// Malformed configuration (unknown keys, missing fields, bad schema).
/// Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentResult {
  int exit_code = 0;  // 0 pass, 1 tolerance failure
  nlohmann::json manifest;
  nlohmann::json report;
  std::vector<std::string> artifacts;  // file names written under out_dir
};

/// Runs one named experiment from a versioned JSON config:
///   {"schema":"qsa-experiment-v1","experiment":"qv","seed":7,"params":{...}}
/// Writes manifest.json, report.json and CSV artifacts under out_dir.
/// Unknown keys anywhere are rejected. All tolerances live in the config
/// with documented defaults; the manifest echoes the fully resolved config
/// together with a content hash.
ExperimentResult run_experiment(nlohmann::json config, const std::string& out_dir);

/// Registered experiment names with one-line descriptions.
std::vector<std::pair<std::string, std::string>> list_experiments();

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace qsa
