// testroll: plan, evaluate, and benchmark profit-maximizing test & roll
// experiments from the command line.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "testroll/beta_binomial.hpp"
#include "testroll/errors.hpp"
#include "testroll/format.hpp"
#include "testroll/ht_baselines.hpp"
#include "testroll/nn_asymmetric.hpp"
#include "testroll/nn_symmetric.hpp"
#include "testroll/numerics.hpp"
#include "testroll/priors.hpp"
#include "testroll/simulator.hpp"

using json = nlohmann::ordered_json;
using namespace testroll;

namespace {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error("config error: " + field + ": " + message) {}
};

constexpr std::int64_t kDefaultThompsonBudget = 500000000;  // N * R updates

// ---------------------------------------------------------------------------
// Config handling

struct Options {
  std::string config_path;
  std::string output_path;
  std::string draws_path;
  std::string format = "text";
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> replicates;
  std::optional<int> threads;
  std::optional<std::int64_t> n1;
  std::optional<std::int64_t> n2;
};

json load_config(const Options& opts) {
  if (opts.config_path.empty()) return json::object();
  std::ifstream in(opts.config_path);
  if (!in) throw ConfigError("--config", "cannot open '" + opts.config_path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
}

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where, "must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* name : allowed)
      if (key == name) ok = true;
    if (!ok) throw ConfigError(where + "." + key, "unknown field");
  }
}

double get_number(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key, "required");
  if (!obj[key].is_number())
    throw ConfigError(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

double get_number_or(const json& obj, const std::string& where, const char* key,
                     double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

std::int64_t get_int(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key, "required");
  if (!obj[key].is_number_integer())
    throw ConfigError(where + "." + key, "must be an integer");
  return obj[key].get<std::int64_t>();
}

std::string get_model(const json& config) {
  if (!config.contains("model")) throw ConfigError("model", "required");
  std::string model = config["model"].get<std::string>();
  if (model != "nn-symmetric" && model != "nn-asymmetric" &&
      model != "beta-binomial")
    throw ConfigError("model",
                      "must be one of nn-symmetric, nn-asymmetric, beta-binomial");
  return model;
}

std::int64_t get_population(const json& config) {
  std::int64_t N = get_int(config, "", "N");
  if (N < 2) throw ConfigError("N", "must be at least 2");
  return N;
}

SymmetricPriors parse_symmetric_priors(const json& config) {
  if (!config.contains("priors")) throw ConfigError("priors", "required");
  const json& p = config["priors"];
  require_keys(p, "priors", {"mu", "sigma", "s", "binary_response"});
  double mu = get_number(p, "priors", "mu");
  double sigma = get_number(p, "priors", "sigma");
  if (!(sigma > 0.0))
    throw ConfigError("priors.sigma",
                      "must be positive (no uncertainty to resolve)");
  bool binary = p.value("binary_response", false);
  if (p.contains("s")) {
    double s = get_number(p, "priors", "s");
    if (!(s > 0.0)) throw ConfigError("priors.s", "must be positive");
    return SymmetricPriors{mu, sigma, s};
  }
  if (!binary)
    throw ConfigError("priors.s", "required unless binary_response is true");
  if (!(mu > 0.0 && mu < 1.0))
    throw ConfigError("priors.mu", "binary response needs mu in (0,1)");
  return binary_response_priors(mu, sigma);
}

AsymmetricProblem parse_asymmetric_problem(const json& config, std::int64_t N) {
  if (config.contains("pricing")) {
    const json& p = config["pricing"];
    require_keys(p, "pricing", {"p1", "p2", "a", "mu", "sigma", "s"});
    PricingSpec spec{get_number(p, "pricing", "p1"), get_number(p, "pricing", "p2"),
                     get_number(p, "pricing", "a"),  get_number(p, "pricing", "mu"),
                     get_number(p, "pricing", "sigma"),
                     get_number(p, "pricing", "s")};
    try {
      return pricing_to_priors(spec, N);
    } catch (const std::domain_error& e) {
      throw ConfigError("pricing", e.what());
    }
  }
  if (!config.contains("arms")) throw ConfigError("arms", "required");
  const json& arms = config["arms"];
  if (!arms.is_array() || arms.size() != 2)
    throw ConfigError("arms", "must be an array of exactly two arm priors");
  auto parse_arm = [&](std::size_t i) {
    std::string where = "arms[" + std::to_string(i) + "]";
    const json& a = arms[i];
    require_keys(a, where, {"mu", "sigma", "s"});
    ArmPrior arm{get_number(a, where, "mu"), get_number(a, where, "sigma"),
                 get_number(a, where, "s")};
    if (!(arm.sigma > 0.0))
      throw ConfigError(where + ".sigma",
                        "must be positive (no uncertainty to resolve)");
    if (!(arm.s > 0.0)) throw ConfigError(where + ".s", "must be positive");
    return arm;
  };
  return AsymmetricProblem{N, parse_arm(0), parse_arm(1)};
}

BetaBinomialSpec parse_bb_spec(const json& config, std::int64_t N) {
  if (!config.contains("beta_binomial"))
    throw ConfigError("beta_binomial", "required");
  const json& b = config["beta_binomial"];
  require_keys(b, "beta_binomial", {"alpha", "beta", "v1", "v2", "n_max"});
  BetaBinomialSpec spec{N, get_number(b, "beta_binomial", "alpha"),
                        get_number(b, "beta_binomial", "beta"),
                        get_number(b, "beta_binomial", "v1"),
                        get_number(b, "beta_binomial", "v2")};
  try {
    spec.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError("beta_binomial", e.what());
  }
  return spec;
}

std::int64_t bb_search_limit(const json& config, std::int64_t N) {
  std::int64_t n_max = std::min<std::int64_t>(N / 2, 100000);
  if (config.contains("beta_binomial") &&
      config["beta_binomial"].contains("n_max"))
    n_max = get_int(config["beta_binomial"], "beta_binomial", "n_max");
  if (n_max < 0 || 2 * n_max > N)
    throw ConfigError("beta_binomial.n_max", "must lie in [0, N/2]");
  return n_max;
}

// Resolved minimum-detectable-effect policy for the baseline rules.
struct HTConfig {
  double alpha = 0.05;
  double power = 0.8;
  enum class DRule { fixed, lift, quantile } rule = DRule::fixed;
  double value = 0.0;  // d, lift fraction, or quantile level

  double resolve_d(double mu, double sigma) const {
    switch (rule) {
      case DRule::fixed: return value;
      case DRule::lift: return value * mu;
      case DRule::quantile:
        // Quantile of the half-normal prior on |m1 - m2|.
        return std::sqrt(2.0) * sigma * normal_quantile(0.5 * (1.0 + value));
    }
    return value;
  }
};

std::optional<HTConfig> parse_ht_config(const json& config) {
  if (!config.contains("hypothesis_test")) return std::nullopt;
  const json& h = config["hypothesis_test"];
  // n_ht/n_fpc/n1_ht/n2_ht appear when a plan output document is fed back
  // in as a config; they are computed values and are ignored here.
  require_keys(h, "hypothesis_test",
               {"alpha", "power", "d", "lift", "quantile", "n_ht", "n_fpc",
                "n1_ht", "n2_ht"});
  HTConfig ht;
  ht.alpha = get_number_or(h, "hypothesis_test", "alpha", 0.05);
  ht.power = get_number_or(h, "hypothesis_test", "power", 0.8);
  int rules = (h.contains("d") ? 1 : 0) + (h.contains("lift") ? 1 : 0) +
              (h.contains("quantile") ? 1 : 0);
  if (rules != 1)
    throw ConfigError("hypothesis_test",
                      "exactly one of d, lift, quantile is required");
  if (h.contains("d")) {
    ht.rule = HTConfig::DRule::fixed;
    ht.value = get_number(h, "hypothesis_test", "d");
  } else if (h.contains("lift")) {
    ht.rule = HTConfig::DRule::lift;
    ht.value = get_number(h, "hypothesis_test", "lift");
  } else {
    ht.rule = HTConfig::DRule::quantile;
    ht.value = get_number(h, "hypothesis_test", "quantile");
    if (!(ht.value > 0.0 && ht.value < 1.0))
      throw ConfigError("hypothesis_test.quantile", "must lie in (0,1)");
  }
  return ht;
}

// ---------------------------------------------------------------------------
// Output helpers

void write_text_or_file(const std::string& content, const Options& opts) {
  if (opts.output_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(opts.output_path, std::ios::binary);
  if (!out)
    throw ConfigError("--output", "cannot write '" + opts.output_path + "'");
  out << content;
}

json report_to_json(const DesignReport& report) {
  json j;
  j["test_profit"] = report.test_profit;
  j["roll_profit"] = report.roll_profit;
  j["total_profit"] = report.total_profit;
  if (report.error_rate)
    j["error_rate"] = *report.error_rate;
  else
    j["error_rate"] = nullptr;
  j["pi_profit"] = report.pi_profit;
  j["regret"] = report.regret;
  j["relative_regret"] = report.relative_regret;
  return j;
}

std::string fixed_decimals(double x, int places) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(places);
  os << x;
  return os.str();
}

std::string report_to_text(const std::string& model, const TestDesign& design,
                           const DesignReport& report,
                           std::optional<double> n_star) {
  std::ostringstream os;
  os << "model:            " << model << "\n";
  os << "population:       " << design.N << "\n";
  if (n_star) os << "n* (continuous):  " << double_to_string(*n_star) << "\n";
  os << "design:           n1=" << design.n1 << "  n2=" << design.n2 << "\n";
  os << "test profit:      " << fixed_decimals(report.test_profit, 2) << "\n";
  os << "roll profit:      " << fixed_decimals(report.roll_profit, 2) << "\n";
  os << "total profit:     " << fixed_decimals(report.total_profit, 2) << "\n";
  if (report.error_rate)
    os << "error rate:       " << fixed_decimals(*report.error_rate * 100.0, 1)
       << "%\n";
  else
    os << "error rate:       n/a\n";
  os << "perfect info:     " << fixed_decimals(report.pi_profit, 2) << "\n";
  os << "regret:           " << fixed_decimals(report.regret, 2) << " ("
     << fixed_decimals(report.relative_regret * 100.0, 2) << "%)\n";
  return os.str();
}

std::string report_to_csv(const std::string& model, const TestDesign& design,
                          const DesignReport& report) {
  std::string out =
      "model,N,n1,n2,test_profit,roll_profit,total_profit,error_rate,"
      "pi_profit,regret,relative_regret\n";
  out += model;
  out.push_back(',');
  out += std::to_string(design.N);
  out.push_back(',');
  out += std::to_string(design.n1);
  out.push_back(',');
  out += std::to_string(design.n2);
  for (double v : {report.test_profit, report.roll_profit, report.total_profit}) {
    out.push_back(',');
    append_double(out, v);
  }
  out.push_back(',');
  if (report.error_rate) append_double(out, *report.error_rate);
  for (double v : {report.pi_profit, report.regret, report.relative_regret}) {
    out.push_back(',');
    append_double(out, v);
  }
  out.push_back('\n');
  return out;
}

// ---------------------------------------------------------------------------
// plan / evaluate

struct PlanResult {
  TestDesign design;
  DesignReport report;
  std::optional<double> n_star;
  json echo;  // model inputs echoed into the output document
};

json ht_block_symmetric(const HTConfig& ht, const SymmetricPriors& priors,
                        std::int64_t N) {
  double d = ht.resolve_d(priors.mu, priors.sigma);
  HTParams params;
  params.alpha = ht.alpha;
  params.power = ht.power;
  params.d = d;
  params.s1 = priors.s;
  params.s2 = priors.s;
  params.N = N;
  json j;
  j["alpha"] = ht.alpha;
  j["power"] = ht.power;
  j["d"] = d;
  j["n_ht"] = n_hypothesis_test(params);
  j["n_fpc"] = n_hypothesis_test_fpc(params);
  return j;
}

json ht_block_asymmetric(const HTConfig& ht, const AsymmetricProblem& problem) {
  if (ht.rule == HTConfig::DRule::quantile)
    throw ConfigError("hypothesis_test.quantile",
                      "quantile rule applies to the symmetric model only");
  double d = ht.resolve_d(problem.arm1.mu, problem.arm1.sigma);
  HTParams params;
  params.alpha = ht.alpha;
  params.power = ht.power;
  params.d = d;
  params.s1 = problem.arm1.s;
  params.s2 = problem.arm2.s;
  UnequalCells cells = n_hypothesis_test_unequal(params);
  json j;
  j["alpha"] = ht.alpha;
  j["power"] = ht.power;
  j["d"] = d;
  j["n1_ht"] = cells.n1;
  j["n2_ht"] = cells.n2;
  return j;
}

PlanResult run_plan_or_evaluate(const json& config, const Options& opts,
                                bool optimize) {
  std::string model = get_model(config);
  std::int64_t N = get_population(config);

  auto design_from_config = [&]() {
    std::int64_t n1, n2;
    if (opts.n1 || opts.n2) {
      if (!(opts.n1 && opts.n2))
        throw ConfigError("--n1/--n2", "both cell sizes are required");
      n1 = *opts.n1;
      n2 = *opts.n2;
    } else {
      if (!config.contains("design"))
        throw ConfigError("design", "required for evaluate (or pass --n1/--n2)");
      require_keys(config["design"], "design", {"n1", "n2"});
      n1 = get_int(config["design"], "design", "n1");
      n2 = get_int(config["design"], "design", "n2");
    }
    TestDesign d{N, n1, n2};
    try {
      d.validate();
    } catch (const std::domain_error& e) {
      throw ConfigError("design", e.what());
    }
    return d;
  };

  PlanResult result;
  if (model == "nn-symmetric") {
    SymmetricPriors priors = parse_symmetric_priors(config);
    if (optimize) {
      double n_star = optimal_n_symmetric(N, priors.s, priors.sigma);
      result.design = integerize_design(n_star, N, priors);
      result.n_star = n_star;
    } else {
      result.design = design_from_config();
    }
    result.report = evaluate_design(result.design, priors);
    result.echo["priors"] = {{"mu", priors.mu}, {"sigma", priors.sigma},
                             {"s", priors.s}};
    if (auto ht = parse_ht_config(config))
      result.echo["hypothesis_test"] = ht_block_symmetric(*ht, priors, N);
  } else if (model == "nn-asymmetric") {
    AsymmetricProblem problem = parse_asymmetric_problem(config, N);
    result.design = optimize ? optimize_design_asymmetric(problem)
                             : design_from_config();
    result.report = evaluate_design(result.design, problem);
    result.echo["arms"] = json::array(
        {{{"mu", problem.arm1.mu}, {"sigma", problem.arm1.sigma}, {"s", problem.arm1.s}},
         {{"mu", problem.arm2.mu}, {"sigma", problem.arm2.sigma}, {"s", problem.arm2.s}}});
    if (auto ht = parse_ht_config(config))
      result.echo["hypothesis_test"] = ht_block_asymmetric(*ht, problem);
  } else {
    BetaBinomialSpec spec = parse_bb_spec(config, N);
    result.design = optimize ? bb_optimal_design(spec, bb_search_limit(config, N))
                             : design_from_config();
    result.report = bb_evaluate_design(result.design, spec);
    result.echo["beta_binomial"] = {{"alpha", spec.alpha}, {"beta", spec.beta},
                                    {"v1", spec.v1}, {"v2", spec.v2}};
  }
  return result;
}

int cmd_plan_evaluate(const Options& opts, bool optimize) {
  json config = load_config(opts);
  PlanResult result = run_plan_or_evaluate(config, opts, optimize);
  std::string model = get_model(config);

  json doc;
  doc["model"] = model;
  doc["N"] = result.design.N;
  for (const auto& [key, value] : result.echo.items()) doc[key] = value;
  if (result.n_star) doc["n_star"] = *result.n_star;
  doc["design"] = {{"n1", result.design.n1}, {"n2", result.design.n2}};
  doc["report"] = report_to_json(result.report);

  if (opts.format == "json") {
    write_text_or_file(doc.dump(2) + "\n", opts);
  } else if (opts.format == "csv") {
    write_text_or_file(report_to_csv(model, result.design, result.report), opts);
  } else {
    write_text_or_file(
        report_to_text(model, result.design, result.report, result.n_star), opts);
  }
  // When the structured result went to a file, still show the summary.
  if (!opts.output_path.empty())
    std::cout << report_to_text(model, result.design, result.report,
                                result.n_star);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

std::vector<ArmPrior> simulation_arms(const json& config, const std::string& model) {
  if (model == "nn-symmetric") {
    SymmetricPriors p = parse_symmetric_priors(config);
    return {ArmPrior{p.mu, p.sigma, p.s}, ArmPrior{p.mu, p.sigma, p.s}};
  }
  if (model == "nn-asymmetric") {
    AsymmetricProblem pb = parse_asymmetric_problem(config, get_population(config));
    return {pb.arm1, pb.arm2};
  }
  throw ConfigError("model", "simulation supports nn-symmetric and nn-asymmetric");
}

std::vector<std::int64_t> planned_cells(const json& config, const std::string& model) {
  std::int64_t N = get_population(config);
  if (model == "nn-symmetric") {
    SymmetricPriors priors = parse_symmetric_priors(config);
    TestDesign d =
        integerize_design(optimal_n_symmetric(N, priors.s, priors.sigma), N, priors);
    return {d.n1, d.n2};
  }
  TestDesign d = optimize_design_asymmetric(parse_asymmetric_problem(config, N));
  return {d.n1, d.n2};
}

std::vector<std::int64_t> ht_cells(const json& config, const std::string& model,
                                   bool fpc) {
  auto ht = parse_ht_config(config);
  if (!ht)
    throw ConfigError("hypothesis_test",
                      "required for an ht_deploy policy without explicit cells");
  std::int64_t N = get_population(config);
  if (model == "nn-symmetric") {
    SymmetricPriors priors = parse_symmetric_priors(config);
    HTParams params;
    params.alpha = ht->alpha;
    params.power = ht->power;
    params.d = ht->resolve_d(priors.mu, priors.sigma);
    params.s1 = priors.s;
    params.s2 = priors.s;
    params.N = N;
    std::int64_t n = fpc ? n_hypothesis_test_fpc(params) : n_hypothesis_test(params);
    return {n, n};
  }
  AsymmetricProblem pb = parse_asymmetric_problem(config, N);
  if (fpc)
    throw ConfigError("simulation.policies",
                      "no finite-population correction for unequal variances");
  HTParams params;
  params.alpha = ht->alpha;
  params.power = ht->power;
  params.d = ht->resolve_d(pb.arm1.mu, pb.arm1.sigma);
  params.s1 = pb.arm1.s;
  params.s2 = pb.arm2.s;
  UnequalCells cells = n_hypothesis_test_unequal(params);
  return {cells.n1, cells.n2};
}

std::vector<PolicySpec> parse_policies(const json& config, const std::string& model) {
  if (!config.contains("simulation"))
    throw ConfigError("simulation", "required");
  const json& sim = config["simulation"];
  require_keys(sim, "simulation",
               {"replicates", "seed", "threads", "policies", "draws_path"});
  if (!sim.contains("policies") || !sim["policies"].is_array())
    throw ConfigError("simulation.policies", "required (array)");
  std::vector<PolicySpec> out;
  for (std::size_t i = 0; i < sim["policies"].size(); ++i) {
    const json& p = sim["policies"][i];
    std::string where = "simulation.policies[" + std::to_string(i) + "]";
    require_keys(p, where, {"kind", "cells", "batch_size", "label", "fpc"});
    if (!p.contains("kind")) throw ConfigError(where + ".kind", "required");
    std::string kind = p["kind"].get<std::string>();
    PolicySpec spec;
    spec.label = p.value("label", "");
    if (kind == "test_roll" || kind == "ht_deploy") {
      spec.kind = kind == "test_roll" ? PolicySpec::Kind::test_roll
                                      : PolicySpec::Kind::ht_deploy;
      if (p.contains("cells")) {
        if (!p["cells"].is_array())
          throw ConfigError(where + ".cells", "must be an array of cell sizes");
        for (const json& c : p["cells"])
          spec.cells.push_back(c.get<std::int64_t>());
      } else if (kind == "test_roll") {
        spec.cells = planned_cells(config, model);
      } else {
        spec.cells = ht_cells(config, model, p.value("fpc", false));
      }
    } else if (kind == "thompson") {
      spec.kind = PolicySpec::Kind::thompson;
      spec.batch_size = p.value("batch_size", std::int64_t{1});
      if (spec.batch_size < 1)
        throw ConfigError(where + ".batch_size", "must be >= 1");
    } else if (kind == "random") {
      spec.kind = PolicySpec::Kind::random_choice;
    } else if (kind == "perfect_info") {
      spec.kind = PolicySpec::Kind::perfect_info;
    } else {
      throw ConfigError(where + ".kind",
                        "must be one of test_roll, ht_deploy, thompson, random, "
                        "perfect_info");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

std::string policy_rows_to_text(const std::vector<PolicyRow>& rows) {
  std::ostringstream os;
  os << "policy            cells          mean_profit   se         regret      "
        "rel_regret  error\n";
  for (const PolicyRow& row : rows) {
    std::string cells;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (i) cells.push_back(';');
      cells += std::to_string(row.cells[i]);
    }
    os << row.policy;
    for (std::size_t i = row.policy.size(); i < 18; ++i) os << ' ';
    os << cells;
    for (std::size_t i = cells.size(); i < 15; ++i) os << ' ';
    os << fixed_decimals(row.mean_profit, 2) << "  ";
    os << (std::isfinite(row.mc_standard_error)
               ? fixed_decimals(row.mc_standard_error, 2)
               : std::string("n/a"))
       << "  ";
    os << fixed_decimals(row.mean_regret, 2) << "  ";
    os << fixed_decimals(row.relative_regret * 100.0, 2) << "%  ";
    if (row.error_frequency)
      os << fixed_decimals(*row.error_frequency * 100.0, 1) << "%";
    if (row.cells_capped) os << "  (cells capped)";
    os << "\n";
  }
  return os.str();
}

json policy_rows_to_json(const std::vector<PolicyRow>& rows) {
  json arr = json::array();
  for (const PolicyRow& row : rows) {
    json j;
    j["policy"] = row.policy;
    j["cells"] = row.cells;
    j["mean_profit"] = row.mean_profit;
    if (std::isfinite(row.mc_standard_error))
      j["mc_standard_error"] = row.mc_standard_error;
    else
      j["mc_standard_error"] = nullptr;
    j["mean_regret"] = row.mean_regret;
    j["relative_regret"] = row.relative_regret;
    if (row.error_frequency)
      j["error_rate"] = *row.error_frequency;
    else
      j["error_rate"] = nullptr;
    j["cells_capped"] = row.cells_capped;
    arr.push_back(j);
  }
  return arr;
}

int cmd_simulate(const Options& opts) {
  json config = load_config(opts);
  std::string model = get_model(config);
  std::int64_t N = get_population(config);
  std::vector<ArmPrior> arms = simulation_arms(config, model);
  std::vector<PolicySpec> policies = parse_policies(config, model);

  const json& sim = config["simulation"];
  std::int64_t R = opts.replicates
                       ? *opts.replicates
                       : static_cast<std::int64_t>(
                             get_number_or(sim, "simulation", "replicates", 10000));
  if (R < 1) throw ConfigError("simulation.replicates", "must be >= 1");
  std::uint64_t seed = static_cast<std::uint64_t>(
      opts.seed ? *opts.seed
                : static_cast<std::int64_t>(
                      get_number_or(sim, "simulation", "seed", 1)));
  int threads = opts.threads ? *opts.threads
                             : static_cast<int>(
                                   get_number_or(sim, "simulation", "threads", 1));
  if (threads < 1) throw ConfigError("simulation.threads", "must be >= 1");

  std::int64_t budget = kDefaultThompsonBudget;
  if (config.contains("limits")) {
    require_keys(config["limits"], "limits", {"max_thompson_updates"});
    budget = get_int(config["limits"], "limits", "max_thompson_updates");
  }
  for (const PolicySpec& p : policies)
    if (p.kind == PolicySpec::Kind::thompson && N * R > budget)
      throw ResourceLimitError(
          "thompson simulation budget exceeded: N*R = " + std::to_string(N * R) +
          " > " + std::to_string(budget));

  std::vector<std::pair<std::string, SimResult>> results;
  std::vector<PolicyRow> rows;
  for (const PolicySpec& policy : policies) {
    SimResult res = simulate(policy, arms, N, R, seed, threads);
    rows.push_back(PolicyRow{policy.display_label(), policy.cells,
                             res.mean_profit, res.mc_standard_error,
                             res.mean_regret, res.relative_regret,
                             res.error_frequency, res.cells_capped});
    results.emplace_back(policy.display_label(), std::move(res));
  }

  std::string draws_path = opts.draws_path;
  if (draws_path.empty() && sim.contains("draws_path"))
    draws_path = sim["draws_path"].get<std::string>();
  if (!draws_path.empty()) {
    std::ofstream out(draws_path, std::ios::binary);
    if (!out) throw ConfigError("--draws", "cannot write '" + draws_path + "'");
    std::vector<std::pair<std::string, const SimResult*>> refs;
    refs.reserve(results.size());
    for (const auto& [label, res] : results) refs.emplace_back(label, &res);
    write_replicate_csv(out, refs);
  }

  if (opts.format == "json") {
    json doc;
    doc["model"] = model;
    doc["N"] = N;
    doc["replicates"] = R;
    doc["seed"] = static_cast<std::int64_t>(seed);
    doc["policies"] = policy_rows_to_json(rows);
    write_text_or_file(doc.dump(2) + "\n", opts);
  } else if (opts.format == "csv") {
    std::ostringstream os;
    write_policy_table_csv(os, rows);
    write_text_or_file(os.str(), opts);
  } else {
    write_text_or_file(policy_rows_to_text(rows), opts);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int points = 0;
  std::string scale;
};

int cmd_sweep(const Options& opts, SweepArgs args) {
  json config = load_config(opts);
  std::string model = get_model(config);
  if (model != "nn-symmetric")
    throw ConfigError("model", "sweep supports the nn-symmetric model");
  std::int64_t N = get_population(config);
  SymmetricPriors priors = parse_symmetric_priors(config);
  std::optional<HTConfig> ht = parse_ht_config(config);

  if (config.contains("sweep")) {
    const json& sw = config["sweep"];
    require_keys(sw, "sweep", {"parameter", "from", "to", "points", "scale"});
    if (args.parameter.empty() && sw.contains("parameter"))
      args.parameter = sw["parameter"].get<std::string>();
    if (args.from == 0.0) args.from = get_number_or(sw, "sweep", "from", 0.0);
    if (args.to == 0.0) args.to = get_number_or(sw, "sweep", "to", 0.0);
    if (args.points == 0)
      args.points = static_cast<int>(get_number_or(sw, "sweep", "points", 0));
    if (args.scale.empty() && sw.contains("scale"))
      args.scale = sw["scale"].get<std::string>();
  }
  if (args.scale.empty()) args.scale = "log";
  if (args.parameter != "N" && args.parameter != "s" && args.parameter != "sigma")
    throw ConfigError("sweep.parameter", "must be one of N, s, sigma");
  if (!(args.from > 0.0) || !(args.to > args.from))
    throw ConfigError("sweep", "need 0 < from < to");
  if (args.points < 2) throw ConfigError("sweep.points", "need at least 2 points");
  if (args.scale != "log" && args.scale != "linear")
    throw ConfigError("sweep.scale", "must be log or linear");

  std::string out = "value,n_star,n_ht,n_fpc\n";
  for (int i = 0; i < args.points; ++i) {
    double t = static_cast<double>(i) / (args.points - 1);
    double value = args.scale == "log"
                       ? args.from * std::pow(args.to / args.from, t)
                       : args.from + (args.to - args.from) * t;
    std::int64_t N_i = N;
    SymmetricPriors priors_i = priors;
    if (args.parameter == "N")
      N_i = static_cast<std::int64_t>(std::llround(value));
    else if (args.parameter == "s")
      priors_i.s = value;
    else
      priors_i.sigma = value;
    if (N_i < 2) throw ConfigError("sweep", "N grid values must be >= 2");
    double n_star = optimal_n_symmetric(N_i, priors_i.s, priors_i.sigma);
    append_double(out, value);
    out.push_back(',');
    append_double(out, n_star);
    out.push_back(',');
    if (ht) {
      HTParams params;
      params.alpha = ht->alpha;
      params.power = ht->power;
      params.d = ht->resolve_d(priors_i.mu, priors_i.sigma);
      params.s1 = priors_i.s;
      params.s2 = priors_i.s;
      params.N = N_i;
      out += std::to_string(n_hypothesis_test(params));
      out.push_back(',');
      out += std::to_string(n_hypothesis_test_fpc(params));
    } else {
      out.push_back(',');
    }
    out.push_back('\n');
  }

  if (opts.format == "json") {
    // Re-shape the CSV rows as JSON records.
    json arr = json::array();
    std::istringstream in(out);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::istringstream fields(line);
      std::string value, n_star, n_ht, n_fpc;
      std::getline(fields, value, ',');
      std::getline(fields, n_star, ',');
      std::getline(fields, n_ht, ',');
      std::getline(fields, n_fpc, ',');
      json row;
      row["value"] = std::stod(value);
      row["n_star"] = std::stod(n_star);
      if (!n_ht.empty()) row["n_ht"] = std::stoll(n_ht);
      if (!n_fpc.empty()) row["n_fpc"] = std::stoll(n_fpc);
      arr.push_back(row);
    }
    write_text_or_file(arr.dump(2) + "\n", opts);
  } else {
    write_text_or_file(out, opts);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// priors

int cmd_priors(const Options& opts, const std::string& input_path,
               std::optional<double> s_override) {
  std::ifstream in(input_path);
  if (!in) throw ConfigError("input", "cannot open '" + input_path + "'");
  std::vector<PastExperiment> experiments;
  try {
    experiments = read_experiments_csv(in);
  } catch (const CsvError& e) {
    std::cerr << "config error: " << input_path << ": " << e.what() << "\n";
    return 2;
  }
  PriorEstimate est;
  try {
    est = estimate_symmetric_priors(experiments, s_override);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (est.sigma_truncated)
    std::cerr << "warning: between-arm variance estimate was truncated at zero\n";
  if (opts.format == "csv") {
    std::string out = "mu,sigma,s,sigma_truncated\n";
    append_double(out, est.priors.mu);
    out.push_back(',');
    append_double(out, est.priors.sigma);
    out.push_back(',');
    append_double(out, est.priors.s);
    out.push_back(',');
    out += est.sigma_truncated ? "1" : "0";
    out.push_back('\n');
    write_text_or_file(out, opts);
  } else {
    json doc;
    doc["mu"] = est.priors.mu;
    doc["sigma"] = est.priors.sigma;
    doc["s"] = est.priors.s;
    doc["sigma_truncated"] = est.sigma_truncated;
    write_text_or_file(doc.dump(2) + "\n", opts);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"testroll: profit-maximizing test & roll experiment design"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opts;
  app.add_option("--config", opts.config_path, "JSON configuration file");
  app.add_option("--output", opts.output_path, "write the result to this path");
  app.add_option("--format", opts.format, "output format")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("--seed", opts.seed, "simulation seed (overrides config)");
  app.add_option("--replicates", opts.replicates,
                 "simulation replicates (overrides config)");
  app.add_option("--threads", opts.threads, "worker threads (overrides config)");
  app.add_option("--draws", opts.draws_path, "per-replicate draws CSV path");

  CLI::App* plan = app.add_subcommand("plan", "compute the optimal design");
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "evaluate an explicit design");
  evaluate->add_option("--n1", opts.n1, "arm 1 test cell size");
  evaluate->add_option("--n2", opts.n2, "arm 2 test cell size");
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Monte Carlo policy comparison");
  CLI::App* sweep = app.add_subcommand("sweep", "sample-size sensitivity grid");
  SweepArgs sweep_args;
  sweep->add_option("--parameter", sweep_args.parameter, "N, s, or sigma");
  sweep->add_option("--from", sweep_args.from, "grid start");
  sweep->add_option("--to", sweep_args.to, "grid end");
  sweep->add_option("--points", sweep_args.points, "grid points");
  sweep->add_option("--scale", sweep_args.scale, "log or linear")
      ->check(CLI::IsMember({"log", "linear"}));
  CLI::App* priors_cmd =
      app.add_subcommand("priors", "estimate priors from past experiments");
  std::string priors_input;
  std::optional<double> priors_s;
  priors_cmd->add_option("input", priors_input, "CSV of past experiments")
      ->required();
  priors_cmd->add_option("--s", priors_s, "response noise override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (plan->parsed()) return cmd_plan_evaluate(opts, true);
    if (evaluate->parsed()) return cmd_plan_evaluate(opts, false);
    if (simulate_cmd->parsed()) return cmd_simulate(opts);
    if (sweep->parsed()) return cmd_sweep(opts, sweep_args);
    if (priors_cmd->parsed()) return cmd_priors(opts, priors_input, priors_s);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ResourceLimitError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
