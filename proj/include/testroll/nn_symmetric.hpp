#pragma once

#include <cstdint>
#include <optional>

namespace testroll {

/// Common belief for both arms of a symmetric test: each arm's true mean
/// response is N(mu, sigma^2) and individual responses around that mean have
/// standard deviation s.
struct SymmetricPriors {
  double mu;
  double sigma;
  double s;

  double s2() const { return s * s; }
  void validate() const;
};

/// Priors for a binary (conversion) outcome: s^2 = mu * (1 - mu).
SymmetricPriors binary_response_priors(double mu, double sigma);

struct TestDesign {
  std::int64_t N;
  std::int64_t n1;
  std::int64_t n2;

  std::int64_t roll_count() const { return N - n1 - n2; }
  void validate() const;
};

/// Closed-form evaluation of a design. error_rate is absent for models where
/// no deployment-error formula is implemented (beta-binomial).
struct DesignReport {
  double test_profit;
  double roll_profit;
  double total_profit;
  std::optional<double> error_rate;
  double pi_profit;
  double regret;
  double relative_regret;
};

/// Profit-maximizing per-arm sample size (continuous). Always positive, at
/// most sqrt(N)*s/(2*sigma), and 2*n < N.
double optimal_n_symmetric(std::int64_t N, double s, double sigma);

/// Rounds a continuous per-arm size to the integer design with higher total
/// expected profit; ties go to the smaller test.
TestDesign integerize_design(double n_star, std::int64_t N,
                             const SymmetricPriors& priors);

/// Test-stage expected profit: (n1 + n2) * mu.
double expected_test_profit(const TestDesign& design,
                            const SymmetricPriors& priors);

/// Roll-stage expected profit under the posterior-mean deployment rule. With
/// an empty cell the test is uninformative and the incremental term is zero.
double expected_roll_profit(const TestDesign& design,
                            const SymmetricPriors& priors);

/// Unconditional probability of deploying the inferior arm,
/// 1/2 - (1/pi) * arctan(sqrt(2) * sigma / s * sqrt(n1 n2 / (n1 + n2))).
/// This counts errors in both directions, i.e. twice the one-direction joint
/// probability, matching how reported "roll error" percentages are defined.
/// The closed form describes the pick-the-higher-cell-mean rule, which is the
/// posterior-mean rule whenever n1 = n2 (all profit-maximizing symmetric
/// designs are equal-cell). Empty cells give 0.5 (deployment is a coin flip).
double total_error_rate(const TestDesign& design, const SymmetricPriors& priors);

/// Probability of deploying arm 1 given the true means:
/// 1 - Phi((m2 - m1) / (s * sqrt(1/n1 + 1/n2))). Requires n1, n2 >= 1.
double conditional_error_rate(double m1, double m2, const TestDesign& design,
                              double s);

/// Expected profit with perfect information: N * (mu + sigma / sqrt(pi)).
double perfect_information_profit(std::int64_t N, const SymmetricPriors& priors);

struct RegretResult {
  double regret;
  double relative;  // regret / perfect-information profit
};

/// Expected regret of a design versus perfect information. Equal cells use
/// the closed form; unequal cells fall back to pi_profit minus the closed-form
/// total profit (the two routes agree to rounding for equal cells).
RegretResult expected_regret(const TestDesign& design,
                             const SymmetricPriors& priors);

/// Full closed-form report for a design.
DesignReport evaluate_design(const TestDesign& design,
                             const SymmetricPriors& priors);

}  // namespace testroll
