#pragma once

#include <cstdint>
#include <stdexcept>

#include "testroll/nn_symmetric.hpp"

namespace testroll {

/// Per-arm belief: true mean response is N(mu, sigma^2), individual responses
/// have sd s.
struct ArmPrior {
  double mu;
  double sigma;
  double s;

  void validate() const;
};

struct AsymmetricProblem {
  std::int64_t N;
  ArmPrior arm1;
  ArmPrior arm2;

  void validate() const;
};

/// Price test mapped onto arm priors. Demand at price p is a - m*p + noise,
/// with price sensitivity m ~ N(mu, sigma^2) and demand noise sd s; profit per
/// customer is p * demand.
struct PricingSpec {
  double p1;
  double p2;
  double a;
  double mu;
  double sigma;
  double s;
};

/// Thrown when the sample-size search exhausts its evaluation budget; carries
/// the best design seen so far.
class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, TestDesign best, double best_profit)
      : std::runtime_error(what), best_design(best), best_total_profit(best_profit) {}
  TestDesign best_design;
  double best_total_profit;
};

/// Deployment choice from test outcomes: the arm with the larger posterior
/// mean. Arms with an empty cell fall back to their prior mean; exact ties
/// pick arm 1.
int posterior_mean_decision(double ybar1, std::int64_t n1, double ybar2,
                            std::int64_t n2, const AsymmetricProblem& problem);

struct ProfitBreakdown {
  double test;
  double roll;
  double total;
};

/// Expected test/roll/total profit at (possibly fractional) cell sizes. An
/// empty cell contributes nothing to the deployment information: its term in
/// the decision spread v vanishes and the roll stage decides from the prior.
ProfitBreakdown expected_profit_asymmetric(double n1, double n2,
                                           const AsymmetricProblem& problem);

/// Integer profit-maximizing design, found by multi-start simplex search on
/// the smooth objective followed by an integer polish of nearby lattice
/// points.
TestDesign optimize_design_asymmetric(const AsymmetricProblem& problem);

struct CellSizes {
  double n1;
  double n2;
};

/// Closed-form optimal sizes for an incumbent/challenger test: equal means,
/// equal response sd s, and challenger spread sigma2 = c * sigma1 with c > 1.
/// For small populations testing the incumbent is wasteful and n1 clamps to 0
/// (the challenger cell is then re-solved under n1 = 0).
CellSizes incumbent_challenger_n(std::int64_t N, double s, double sigma1,
                                 double c);

/// Population size below which the incumbent cell is zero.
double incumbent_test_threshold(double s, double sigma1, double c);

/// Maps a two-price test onto asymmetric arm priors:
/// mu_j = p_j (a - mu p_j), sigma_j = p_j^2 sigma, s_j = p_j s.
AsymmetricProblem pricing_to_priors(const PricingSpec& spec, std::int64_t N);

/// N * E[max(m1, m2)] for independent normal arm means.
double perfect_information_profit_asymmetric(const AsymmetricProblem& problem);

/// Probability that the posterior-mean rule deploys the arm with the lower
/// true mean. Evaluated by adaptive quadrature over the prior on m1 - m2;
/// reduces to the arctan closed form when the arms are exchangeable.
double error_rate_asymmetric(std::int64_t n1, std::int64_t n2,
                             const AsymmetricProblem& problem);

/// Full closed-form report for a design under asymmetric priors.
DesignReport evaluate_design(const TestDesign& design,
                             const AsymmetricProblem& problem);

}  // namespace testroll
