#pragma once

#include <cstdint>

#include "testroll/nn_symmetric.hpp"

namespace testroll {

/// Conversion test with a shared Beta(alpha, beta) prior on each arm's
/// conversion rate and per-conversion values v1, v2.
struct BetaBinomialSpec {
  std::int64_t N;
  double alpha;
  double beta;
  double v1;
  double v2;

  void validate() const;
};

/// Test-stage expected profit: (n1 v1 + n2 v2) * alpha / (alpha + beta).
double bb_expected_test_profit(std::int64_t n1, std::int64_t n2,
                               const BetaBinomialSpec& spec);

/// Real-valued crossover count for arm 2's observed conversions y2: arm 1 is
/// deployed iff y1 >= threshold (an exact integer tie deploys arm 1).
double bb_decision_threshold(std::int64_t y2, std::int64_t n1, std::int64_t n2,
                             const BetaBinomialSpec& spec);

/// Roll-stage expected profit: the exact sum over all (y1, y2) test outcomes
/// of their beta-binomial mass times the deployed arm's posterior expected
/// profit per customer. Masses are evaluated in log space. Cells above 1e5
/// are rejected as a resource limit.
double bb_expected_roll_profit(std::int64_t n1, std::int64_t n2,
                               const BetaBinomialSpec& spec);

/// Profit-maximizing equal-cell design over n in {0..n_max}: exhaustive for
/// n_max <= 2000, otherwise bracketing search refined by an exhaustive sweep
/// around the bracket optimum.
TestDesign bb_optimal_design(const BetaBinomialSpec& spec, std::int64_t n_max);

struct NormalApprox {
  double mu;
  double s;
  double sigma;
};

/// Moment-matching normal approximation of the Beta prior:
/// mu = a/(a+b), s = sqrt(mu(1-mu)), sigma = sqrt(ab / ((a+b)^2 (a+b+1))).
NormalApprox bb_to_normal_approx(double alpha, double beta);

/// N * E[max(v1 p1, v2 p2)] over independent Beta prior draws, via quadrature
/// on the survival function.
double bb_perfect_information_profit(const BetaBinomialSpec& spec);

/// Closed-form report for an equal- or unequal-cell design. No deployment
/// error-rate formula is available for this model.
DesignReport bb_evaluate_design(const TestDesign& design,
                                const BetaBinomialSpec& spec);

}  // namespace testroll
