#include "testroll/priors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

namespace testroll {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

std::vector<PastExperiment> read_experiments_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw CsvError(1, "missing header row");
  ++line_no;
  std::vector<std::string> header = split_csv_line(line);
  for (std::string& h : header) h = trim(h);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  std::optional<std::size_t> id_col = column("experiment_id");
  std::optional<std::size_t> arm_col = column("arm_id");
  std::optional<std::size_t> n_col = column("n");
  std::optional<std::size_t> mean_col = column("mean");
  std::optional<std::size_t> sd_col = column("sd");
  const std::vector<std::pair<std::string, std::optional<std::size_t>>> required =
      {{"experiment_id", id_col}, {"arm_id", arm_col}, {"n", n_col}, {"mean", mean_col}};
  for (const auto& [name, col] : required)
    if (!col) throw CsvError(1, "missing column '" + name + "'");

  std::vector<PastExperiment> experiments;
  std::map<std::string, std::size_t> index_by_id;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() < header.size())
      throw CsvError(line_no, "expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
    auto parse_double = [&](std::size_t col, const char* what) {
      try {
        std::size_t used = 0;
        double v = std::stod(trim(fields[col]), &used);
        if (used != trim(fields[col]).size()) throw std::invalid_argument("trailing text");
        return v;
      } catch (const std::exception&) {
        throw CsvError(line_no, std::string("invalid ") + what + " '" +
                                    trim(fields[col]) + "'");
      }
    };
    ArmObservation arm;
    double n_val = parse_double(*n_col, "n");
    if (!(n_val >= 1.0) || n_val != std::floor(n_val))
      throw CsvError(line_no, "n must be a positive integer");
    arm.n = static_cast<std::int64_t>(n_val);
    arm.mean = parse_double(*mean_col, "mean");
    if (sd_col && !trim(fields[*sd_col]).empty()) {
      double sd = parse_double(*sd_col, "sd");
      if (!(sd >= 0.0)) throw CsvError(line_no, "sd must be non-negative");
      arm.sd = sd;
    }
    std::string id = trim(fields[*id_col]);
    if (id.empty()) throw CsvError(line_no, "empty experiment_id");
    auto [it, inserted] = index_by_id.emplace(id, experiments.size());
    if (inserted) experiments.push_back(PastExperiment{id, {}});
    experiments[it->second].arms.push_back(arm);
  }
  return experiments;
}

PriorEstimate estimate_symmetric_priors(const std::vector<PastExperiment>& experiments,
                                        std::optional<double> s_override) {
  if (experiments.size() < 3)
    throw std::invalid_argument(
        "estimate_symmetric_priors: at least 3 experiments are required");
  for (const PastExperiment& ex : experiments) {
    if (ex.arms.size() < 2)
      throw std::invalid_argument("estimate_symmetric_priors: experiment '" +
                                  ex.id + "' has fewer than 2 arms");
    for (const ArmObservation& arm : ex.arms)
      if (arm.n < 1)
        throw std::invalid_argument("estimate_symmetric_priors: experiment '" +
                                    ex.id + "' has an arm with n < 1");
  }

  double s;
  if (s_override) {
    if (!(*s_override > 0.0))
      throw std::invalid_argument("estimate_symmetric_priors: s must be positive");
    s = *s_override;
  } else {
    // Pooled within-arm sd over all arms that report one.
    double weighted_var = 0.0, dof = 0.0;
    for (const PastExperiment& ex : experiments)
      for (const ArmObservation& arm : ex.arms)
        if (arm.sd && arm.n > 1) {
          weighted_var += static_cast<double>(arm.n - 1) * (*arm.sd) * (*arm.sd);
          dof += static_cast<double>(arm.n - 1);
        }
    if (dof <= 0.0)
      throw std::invalid_argument(
          "estimate_symmetric_priors: no sd data to pool; pass s explicitly");
    s = std::sqrt(weighted_var / dof);
  }

  double weight_sum = 0.0, weighted_mean = 0.0;
  for (const PastExperiment& ex : experiments)
    for (const ArmObservation& arm : ex.arms) {
      weighted_mean += static_cast<double>(arm.n) * arm.mean;
      weight_sum += static_cast<double>(arm.n);
    }
  double mu = weighted_mean / weight_sum;

  // Between-arm spread from the first two arms of each experiment:
  // Var(ybar1 - ybar2) = 2 sigma^2 + s^2 (1/n1 + 1/n2).
  double acc = 0.0;
  for (const PastExperiment& ex : experiments) {
    const ArmObservation& a = ex.arms[0];
    const ArmObservation& b = ex.arms[1];
    double diff = a.mean - b.mean;
    double noise = s * s * (1.0 / static_cast<double>(a.n) +
                            1.0 / static_cast<double>(b.n));
    acc += (diff * diff - noise) / 2.0;
  }
  double sigma2 = acc / static_cast<double>(experiments.size());
  bool truncated = sigma2 <= 0.0;
  double sigma = truncated ? 0.0 : std::sqrt(sigma2);
  return PriorEstimate{SymmetricPriors{mu, sigma, s}, truncated};
}

}  // namespace testroll
