#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "testroll/nn_symmetric.hpp"

namespace testroll {

struct ArmObservation {
  std::int64_t n;
  double mean;
  std::optional<double> sd;
};

struct PastExperiment {
  std::string id;
  std::vector<ArmObservation> arms;
};

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_number(line) {}
  std::size_t line_number;
};

/// Parses experiment summaries from CSV with header
/// experiment_id,arm_id,n,mean[,sd] (columns may appear in any order).
std::vector<PastExperiment> read_experiments_csv(std::istream& in);

struct PriorEstimate {
  SymmetricPriors priors;
  bool sigma_truncated;  // the between-arm variance estimate hit zero
};

/// Moment-matching estimate of symmetric priors from past two-arm experiments:
/// mu is the sample-size-weighted grand mean; sigma^2 averages
/// ((ybar1 - ybar2)^2 - s^2 (1/n1 + 1/n2)) / 2 across experiments, truncated
/// at zero. s is taken from s_override or pooled from the per-arm sd column.
/// Requires at least 3 experiments with at least 2 arms each.
PriorEstimate estimate_symmetric_priors(const std::vector<PastExperiment>& experiments,
                                        std::optional<double> s_override = {});

}  // namespace testroll
