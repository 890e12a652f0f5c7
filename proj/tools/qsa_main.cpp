#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "qsa/experiments.hpp"
#include "qsa/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qsa: quasi-sure stochastic analysis experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string config_path;
  std::string out_dir;
  std::int64_t seed_override = -1;
  int threads = 0;
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (default: config's directory)");
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--threads", threads, "worker thread count");

  auto* list = app.add_subcommand("list", "list registered experiments");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& [name, doc] : qsa::list_experiments())
      std::printf("%-20s %s\n", name.c_str(), doc.c_str());
    return 0;
  }

  if (threads > 0) qsa::set_threads(threads);
  try {
    std::ifstream is(config_path);
    if (!is) {
      std::fprintf(stderr, "error: cannot read config '%s'\n", config_path.c_str());
      return 2;
    }
    nlohmann::json config;
    try {
      is >> config;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: config is not valid JSON: %s\n", e.what());
      return 2;
    }
    if (seed_override >= 0) config["seed"] = static_cast<std::uint64_t>(seed_override);
    if (out_dir.empty()) {
      out_dir = "qsa-out";
      if (config.contains("experiment"))
        out_dir += "-" + config["experiment"].get<std::string>();
    }
    const qsa::ExperimentResult result = qsa::run_experiment(config, out_dir);
    std::printf("%s: %s (report in %s)\n",
                config.value("experiment", std::string("experiment")).c_str(),
                result.exit_code == 0 ? "pass" : "TOLERANCE FAILURE", out_dir.c_str());
    return result.exit_code;
  } catch (const qsa::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
