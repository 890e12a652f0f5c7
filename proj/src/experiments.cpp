#include "qsa/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "qsa/aggregation.hpp"
#include "qsa/brownian.hpp"
#include "qsa/calculus.hpp"
#include "qsa/coefficient_json.hpp"
#include "qsa/path_io.hpp"
#include "qsa/stats.hpp"
#include "qsa/superhedging.hpp"

namespace qsa {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Context {
  fs::path out;
  std::uint64_t seed = 0;
  json params;
  json report;
  std::vector<std::string> artifacts;
  std::vector<std::string> csv_rows;  // diagnostics: operation,statistic,value,tolerance,pass
  bool pass = true;

  void check(const std::string& op, const std::string& stat, double value,
             double tolerance, bool ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%s,%.12g,%.12g,%d", op.c_str(), stat.c_str(),
                  value, tolerance, ok ? 1 : 0);
    csv_rows.push_back(buf);
    if (!ok) pass = false;
  }

  void write_text(const std::string& name, const std::string& body) {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    os << body;
    artifacts.push_back(name);
  }

  void flush_diagnostics(const std::string& name = "diagnostics.csv") {
    if (csv_rows.empty()) return;
    std::string body = "operation,statistic,value,tolerance,pass\n";
    for (const auto& r : csv_rows) body += r + "\n";
    write_text(name, body);
  }
};

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

// Defaults are materialized into the params object so the manifest echoes
// the fully resolved configuration and its hash tracks resolved values.
double get_num(json& p, const std::string& key, double fallback) {
  if (!p.contains(key)) p[key] = fallback;
  return p.at(key).get<double>();
}

std::size_t get_count(json& p, const std::string& key, std::size_t fallback) {
  if (!p.contains(key)) p[key] = fallback;
  return p.at(key).get<std::size_t>();
}

std::string get_str(json& p, const std::string& key, const std::string& fallback) {
  if (!p.contains(key)) p[key] = fallback;
  return p.at(key).get<std::string>();
}

Payoff payoff_from_json(const json& j) {
  require_keys(j, {"kind", "strike", "k1", "k2", "k3", "value"}, "payoff");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "call") return call_payoff(j.at("strike").get<double>());
  if (kind == "put") return put_payoff(j.at("strike").get<double>());
  if (kind == "butterfly")
    return butterfly_payoff(j.at("k1").get<double>(), j.at("k2").get<double>(),
                            j.at("k3").get<double>());
  if (kind == "constant") return constant_payoff(j.at("value").get<double>());
  throw ConfigError("unknown payoff kind '" + kind + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// Handlers

void run_simulate(Context& ctx) {
  require_keys(ctx.params, {"T", "N", "n", "d", "coefficient", "format"}, "params");
  const double T = get_num(ctx.params, "T", 1.0);
  const std::size_t N = get_count(ctx.params, "N", 1000);
  const std::size_t n = get_count(ctx.params, "n", 100);
  const std::size_t d = get_count(ctx.params, "d", 1);
  const std::string format = get_str(ctx.params, "format", "csv");
  GridPtr grid = make_grid(T, N);

  PathEnsemble e;
  if (ctx.params.contains("coefficient")) {
    SeparableCoefficient a = coefficient_from_json(ctx.params.at("coefficient"), grid);
    e = sample_measure(MeasureSampler{std::move(a), ctx.seed, 0}, n);
  } else {
    e = sample_brownian(grid, d, n, ctx.seed);
  }
  if (format == "csv" || format == "both") {
    write_ensemble_csv(e, (ctx.out / "ensemble.csv").string());
    ctx.artifacts.push_back("ensemble.csv");
  }
  if (format == "binary" || format == "both") {
    write_ensemble_binary(e, (ctx.out / "ensemble.bin").string());
    ctx.artifacts.push_back("ensemble.bin");
  }

  std::vector<double> terminal(e.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    terminal[i] = e.paths[i].value(e.paths[i].points() - 1);
  ctx.report["terminal_mean"] = mean(terminal);
  ctx.report["terminal_variance"] = variance(terminal);
  ctx.report["paths"] = e.size();
}

void run_qv(Context& ctx) {
  require_keys(ctx.params, {"T", "N", "n", "coefficient", "window", "tolerance"},
               "params");
  const double T = get_num(ctx.params, "T", 1.0);
  const std::size_t N = get_count(ctx.params, "N", 10000);
  const std::size_t n = get_count(ctx.params, "n", 1000);
  const double tol = get_num(ctx.params, "tolerance", 0.02);
  GridPtr grid = make_grid(T, N);
  if (!ctx.params.contains("coefficient"))
    ctx.params["coefficient"] = json{{"kind", "constant"}, {"matrix", {2.0}}};
  const json cspec = ctx.params.at("coefficient");
  SeparableCoefficient a = coefficient_from_json(cspec, grid);

  std::vector<double> qv_terminal(n), target(n);
  MeasureSampler sampler{a, ctx.seed, 0};
  for_each_sample(sampler, n, [&](std::size_t i, const Path& x, const Path&) {
    const MatrixPath qv = quadratic_variation(x);
    qv_terminal[i] = qv.at(x.points() - 1, 0, 0);
    const CoefficientTrace tr = a.trace(x);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < x.points(); ++k)
      integral += tr.at[k]->data()[0] * x.grid().step(k);
    target[i] = integral;
  });
  const double got = mean(qv_terminal);
  const double want = mean(target);
  const double rel = std::abs(got - want) / std::abs(want);
  ctx.check("qv", "terminal_mean", got, tol, rel <= tol);
  ctx.report["qv_terminal_mean"] = got;
  ctx.report["coefficient_integral_mean"] = want;
  ctx.report["relative_error"] = rel;
}

void run_girsanov_check(Context& ctx) {
  require_keys(ctx.params, {"T", "N", "n", "phi", "se_multiple"}, "params");
  const double T = get_num(ctx.params, "T", 1.0);
  const std::size_t N = get_count(ctx.params, "N", 1000);
  const std::size_t n = get_count(ctx.params, "n", 20000);
  const double phi_value = get_num(ctx.params, "phi", 1.0);
  const double k = get_num(ctx.params, "se_multiple", 3.0);

  const PathEnsemble w = sample_brownian(make_grid(T, N), 1, n, ctx.seed);
  const GirsanovResult g = girsanov_weights(Integrand::constant({phi_value}), w);

  std::vector<double> tilted_terminal(n);
  for (std::size_t i = 0; i < n; ++i)
    tilted_terminal[i] = g.tilted.paths[i].value(N);
  const double wmean = weighted_mean(tilted_terminal, g.tilted.weights);
  const double wse = weighted_standard_error(tilted_terminal, g.tilted.weights);
  const double zmean = mean(g.z_terminal);
  const double zse = standard_error(g.z_terminal);

  ctx.check("girsanov", "weighted_mean_tilted_terminal", wmean, k * wse,
            std::abs(wmean) <= k * wse);
  ctx.check("girsanov", "mean_z_minus_one", zmean - 1.0, k * zse,
            std::abs(zmean - 1.0) <= k * zse);
  ctx.report["weighted_mean"] = wmean;
  ctx.report["weighted_se"] = wse;
  ctx.report["z_mean"] = zmean;
  ctx.report["z_se"] = zse;
  ctx.report["overflow_count"] = g.overflow_count;
}

void run_aggregate_check(Context& ctx) {
  require_keys(ctx.params,
               {"T", "N", "coefficients", "n_probes", "tolerance", "n_classify",
                "classify_tolerance", "min_match"},
               "params");
  const double T = get_num(ctx.params, "T", 1.0);
  const std::size_t N = get_count(ctx.params, "N", 10000);
  const std::size_t n_probes = get_count(ctx.params, "n_probes", 64);
  const double tol = get_num(ctx.params, "tolerance", 0.0);
  const std::size_t n_classify = get_count(ctx.params, "n_classify", 200);
  const double ctol = get_num(ctx.params, "classify_tolerance", 0.2);
  const double min_match = get_num(ctx.params, "min_match", 0.99);
  GridPtr grid = make_grid(T, N);

  std::vector<SeparableCoefficient> coeffs;
  for (const auto& cj : ctx.params.at("coefficients"))
    coeffs.push_back(coefficient_from_json(cj, grid));
  if (coeffs.size() < 2) throw ConfigError("aggregate-check needs two coefficients");

  ProcessFamily family = ProcessFamily::strong_solutions(coeffs, grid);
  const AggregationReport consistency = check_consistency(family, n_probes, tol, ctx.seed);

  std::string body = "a,b,theta_min,theta_max,max_discrepancy,pass\n";
  for (const auto& pr : consistency.pairs) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.12g,%.12g,%.12g,%d\n", pr.a, pr.b,
                  pr.theta_min, pr.theta_max, pr.max_discrepancy, pr.pass ? 1 : 0);
    body += buf;
  }
  ctx.write_text("consistency.csv", body);
  ctx.check("check_consistency", "max_pair_discrepancy",
            consistency.pairs.empty() ? 0.0 : consistency.pairs.front().max_discrepancy,
            tol, consistency.pass);

  // Mixed labeled ensemble, then the classification aggregator.
  PathEnsemble mixed;
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < coeffs.size(); ++c) {
    PathEnsemble e =
        sample_measure(MeasureSampler{coeffs[c], ctx.seed, (c + 1) << 24}, n_classify);
    for (auto& p : e.paths) {
      mixed.paths.push_back(std::move(p));
      labels.push_back(c);
    }
  }
  mixed.weights = PathEnsemble::uniform_weights(mixed.paths.size());
  mixed.seed = ctx.seed;
  const AggregateResult agg = aggregate(family, mixed, labels, ctol, min_match);
  ctx.check("aggregate", "min_match_fraction",
            *std::min_element(agg.match_fraction.begin(), agg.match_fraction.end()),
            min_match, agg.pass);
  ctx.report["consistency_pass"] = consistency.pass;
  ctx.report["match_fraction"] = agg.match_fraction;
  ctx.report["unclassified"] = agg.unclassified;
}

void run_no_aggregation_demo(Context& ctx) {
  require_keys(ctx.params,
               {"lo", "hi", "lattice", "n", "steps", "fail_threshold",
                "random_candidates", "accuracy_paths"},
               "params");
  NoAggregationConfig cfg;
  cfg.lo = get_num(ctx.params, "lo", 1.0);
  cfg.hi = get_num(ctx.params, "hi", 2.0);
  cfg.lattice = get_count(ctx.params, "lattice", 11);
  cfg.n_paths = get_count(ctx.params, "n", 1000);
  cfg.steps = get_count(ctx.params, "steps", 32000);
  cfg.fail_threshold = get_num(ctx.params, "fail_threshold", 0.45);
  cfg.random_candidates = get_count(ctx.params, "random_candidates", 6);
  cfg.accuracy_paths = get_count(ctx.params, "accuracy_paths", 300);
  cfg.seed = ctx.seed;

  const NoAggregationReport rep = no_aggregation_demo(cfg);

  std::string body =
      "candidate,max_fail,avg_fail,lambda_row,lambda_col,lambda_sum,lambda_required,"
      "lambda_achievable\n";
  for (const auto& c : rep.candidates) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                  c.name.c_str(), c.max_fail, c.avg_fail, c.lambda_row, c.lambda_col,
                  c.lambda_row + c.lambda_col, rep.lambda_required,
                  rep.lambda_achievable);
    body += buf;
  }
  ctx.write_text("candidates.csv", body);

  if (cfg.lattice > 1) {
    ctx.check("no_aggregation_demo", "every_candidate_fails",
              rep.every_candidate_fails ? 1.0 : 0.0, cfg.fail_threshold,
              rep.every_candidate_fails);
    ctx.check("no_aggregation_demo", "pure_accuracy", rep.pure_accuracy, 0.99,
              rep.pure_accuracy >= 0.99);
  } else {
    ctx.check("no_aggregation_demo", "degenerate_success",
              rep.degenerate_success ? 1.0 : 0.0, 1.0, rep.degenerate_success);
  }
  ctx.report["pure_accuracy"] = rep.pure_accuracy;
  ctx.report["every_candidate_fails"] = rep.every_candidate_fails;
  json cands = json::array();
  for (const auto& c : rep.candidates)
    cands.push_back({{"name", c.name},
                     {"max_fail", c.max_fail},
                     {"avg_fail", c.avg_fail},
                     {"lambda_row", c.lambda_row},
                     {"lambda_col", c.lambda_col}});
  ctx.report["candidates"] = cands;
}

void run_price_dp(Context& ctx) {
  require_keys(ctx.params,
               {"payoff", "sigmas", "steps", "s0", "T", "reference", "rtol"}, "params");
  const Payoff payoff = payoff_from_json(ctx.params.at("payoff"));
  const std::vector<double> sigmas = ctx.params.at("sigmas").get<std::vector<double>>();
  const std::size_t steps = get_count(ctx.params, "steps", 200);
  const double s0 = get_num(ctx.params, "s0", 100.0);
  const double T = get_num(ctx.params, "T", 1.0);

  const VolLattice lattice(s0, T, steps, sigmas);
  ValueProcess vp = dp_value(lattice, payoff);
  extract_hedge(vp);

  std::vector<std::size_t> argmax_counts(sigmas.size(), 0);
  for (const auto& layer : vp.argmax)
    for (int a : layer) ++argmax_counts[static_cast<std::size_t>(a)];

  ctx.report["value"] = vp.root_value();
  ctx.report["hedge_root"] = vp.hedge.front().front();
  ctx.report["argmax_counts"] = argmax_counts;
  if (ctx.params.contains("reference")) {
    const double ref = ctx.params.at("reference").get<double>();
    const double rtol = get_num(ctx.params, "rtol", 0.01);
    const double rel = std::abs(vp.root_value() - ref) / std::abs(ref);
    ctx.check("price_dp", "relative_error_vs_reference", rel, rtol, rel <= rtol);
  }
}

void run_price_bsb(Context& ctx) {
  require_keys(ctx.params,
               {"payoff", "sigma_lo", "sigma_hi", "s0", "T", "space_nodes",
                "time_steps", "s_max_mult", "reference", "rtol"},
               "params");
  const Payoff payoff = payoff_from_json(ctx.params.at("payoff"));
  const double lo = ctx.params.at("sigma_lo").get<double>();
  const double hi = ctx.params.at("sigma_hi").get<double>();
  const double s0 = get_num(ctx.params, "s0", 100.0);
  const double T = get_num(ctx.params, "T", 1.0);
  const std::size_t nodes = get_count(ctx.params, "space_nodes", 600);
  const std::size_t tsteps = get_count(ctx.params, "time_steps", 0);
  const double smult = get_num(ctx.params, "s_max_mult", 4.0);

  const BsbFdResult res = bsb_fd_price(payoff, lo, hi, s0, T, nodes, tsteps, smult);
  ctx.report["value"] = res.value;
  ctx.report["time_steps_used"] = res.time_steps_used;
  ctx.report["cfl_refined"] = res.cfl_refined;
  if (ctx.params.contains("reference")) {
    const double ref = ctx.params.at("reference").get<double>();
    const double rtol = get_num(ctx.params, "rtol", 0.005);
    const double rel = std::abs(res.value - ref) / std::abs(ref);
    ctx.check("price_bsb", "relative_error_vs_reference", rel, rtol, rel <= rtol);
  }
}

void run_price_mc(Context& ctx) {
  require_keys(ctx.params,
               {"payoff", "coefficients", "n", "N", "T", "s0", "reference",
                "se_multiple"},
               "params");
  const Payoff payoff = payoff_from_json(ctx.params.at("payoff"));
  const std::size_t n = get_count(ctx.params, "n", 20000);
  const std::size_t N = get_count(ctx.params, "N", 256);
  const double T = get_num(ctx.params, "T", 1.0);
  const double s0 = get_num(ctx.params, "s0", 100.0);
  GridPtr grid = make_grid(T, N);

  std::vector<SeparableCoefficient> coeffs;
  for (const auto& cj : ctx.params.at("coefficients"))
    coeffs.push_back(coefficient_from_json(cj, grid));

  const McLowerBound mc = mc_lower_bound(payoff, coeffs, n, s0, ctx.seed);
  ctx.report["best_mean"] = mc.best_mean;
  ctx.report["best_se"] = mc.best_se;
  ctx.report["argmax"] = mc.argmax;
  ctx.report["means"] = mc.means;
  ctx.report["ses"] = mc.ses;
  if (ctx.params.contains("reference")) {
    const double ref = ctx.params.at("reference").get<double>();
    const double k = get_num(ctx.params, "se_multiple", 3.0);
    const double gap = std::abs(mc.best_mean - ref);
    ctx.check("price_mc", "gap_vs_reference", gap, k * mc.best_se,
              gap <= k * mc.best_se);
  }
}

void run_hedge_verify(Context& ctx) {
  require_keys(ctx.params,
               {"payoff", "price", "hedge", "sigmas", "n", "steps", "T", "s0",
                "eps_frac", "max_fail"},
               "params");
  const Payoff payoff = payoff_from_json(ctx.params.at("payoff"));
  const double price = ctx.params.at("price").get<double>();
  const std::vector<double> sigmas = ctx.params.at("sigmas").get<std::vector<double>>();
  const std::size_t n = get_count(ctx.params, "n", 800);
  const std::size_t steps = get_count(ctx.params, "steps", 250000);
  const double T = get_num(ctx.params, "T", 1.0);
  const double s0 = get_num(ctx.params, "s0", 100.0);
  const double eps_frac = get_num(ctx.params, "eps_frac", 0.005);
  const double max_fail = get_num(ctx.params, "max_fail", 0.01);

  const json& hj = ctx.params.at("hedge");
  require_keys(hj, {"kind", "sigma", "strike"}, "hedge");
  std::function<double(double, double)> hedge;
  const std::string kind = hj.at("kind").get<std::string>();
  if (kind == "bs_delta") {
    const double sigma = hj.at("sigma").get<double>();
    const double strike = hj.at("strike").get<double>();
    hedge = [sigma, strike, T](double t, double s) {
      const double rem = std::max(T - t, 1e-12);
      const double d1 = (std::log(s / strike) + 0.5 * sigma * sigma * rem) /
                        (sigma * std::sqrt(rem));
      return normal_cdf(d1);
    };
  } else if (kind == "zero") {
    hedge = [](double, double) { return 0.0; };
  } else {
    throw ConfigError("unknown hedge kind '" + kind + "'");
  }

  const ShortfallReport rep = verify_superhedge(price, hedge, payoff, sigmas, n, steps,
                                                T, s0, eps_frac, ctx.seed, max_fail);
  std::string body = "sigma,min_shortfall,p01_shortfall,fraction_below,pass\n";
  for (const auto& m : rep.measures) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6g,%.12g,%.12g,%.6g,%d\n", m.sigma,
                  m.min_shortfall, m.p01_shortfall, m.fraction_below, m.pass ? 1 : 0);
    body += buf;
    ctx.check("hedge_verify", "fraction_below_sigma_" + std::to_string(m.sigma),
              m.fraction_below, max_fail, m.pass);
  }
  ctx.write_text("shortfall.csv", body);
  ctx.report["epsilon"] = rep.epsilon;
  ctx.report["pass"] = rep.pass;
}

using Handler = void (*)(Context&);

const std::map<std::string, std::pair<Handler, std::string>>& registry() {
  static const std::map<std::string, std::pair<Handler, std::string>> reg = {
      {"simulate", {run_simulate, "sample a Brownian or coefficient-driven ensemble"}},
      {"qv", {run_qv, "quadratic variation recovery against the coefficient integral"}},
      {"girsanov-check", {run_girsanov_check, "exponential reweighting sanity checks"}},
      {"aggregate-check",
       {run_aggregate_check, "pairwise consistency and the classification aggregator"}},
      {"no-aggregation-demo",
       {run_no_aggregation_demo, "two-coordinate mixtures that defeat every aggregator"}},
      {"price-dp", {run_price_dp, "lattice dynamic-programming superhedging price"}},
      {"price-bsb", {run_price_bsb, "nonlinear finite-difference pricer"}},
      {"price-mc", {run_price_mc, "Monte-Carlo lower bound over a coefficient list"}},
      {"hedge-verify", {run_hedge_verify, "pathwise superhedge shortfall verification"}},
  };
  return reg;
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::pair<std::string, std::string>> list_experiments() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, entry] : registry()) out.emplace_back(name, entry.second);
  return out;
}

ExperimentResult run_experiment(json config, const std::string& out_dir) {
  require_keys(config, {"schema", "experiment", "seed", "params"}, "config");
  if (config.value("schema", "") != std::string("qsa-experiment-v1"))
    throw ConfigError("config schema must be qsa-experiment-v1");
  if (!config.contains("experiment")) throw ConfigError("missing experiment name");
  const std::string name = config.at("experiment").get<std::string>();
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown experiment '" + name + "'");

  Context ctx;
  ctx.out = out_dir;
  fs::create_directories(ctx.out);
  ctx.seed = config.value("seed", std::uint64_t{0});
  ctx.params = config.value("params", json::object());

  it->second.first(ctx);
  ctx.flush_diagnostics();

  // Manifest echoes the fully resolved config; its hash changes iff any
  // resolved parameter changes.
  json resolved = {{"schema", "qsa-experiment-v1"},
                   {"experiment", name},
                   {"seed", ctx.seed},
                   {"params", ctx.params}};
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(resolved.dump())));

  ExperimentResult result;
  result.report = ctx.report;
  result.report["pass"] = ctx.pass;
  result.exit_code = ctx.pass ? 0 : 1;

  result.manifest = {{"config", resolved}, {"config_hash", hash_hex}};

  {
    std::ofstream os(ctx.out / "report.json", std::ios::binary);
    os << result.report.dump(2) << "\n";
    ctx.artifacts.push_back("report.json");
  }
  result.manifest["artifacts"] = ctx.artifacts;
  {
    std::ofstream os(ctx.out / "manifest.json", std::ios::binary);
    os << result.manifest.dump(2) << "\n";
  }
  result.artifacts = ctx.artifacts;
  return result;
}

}  // namespace qsa
