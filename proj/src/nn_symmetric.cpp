#include "testroll/nn_symmetric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "testroll/numerics.hpp"

namespace testroll {

namespace {
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

void SymmetricPriors::validate() const {
  if (!std::isfinite(mu)) throw std::domain_error("priors: mu must be finite");
  if (!(sigma > 0.0)) throw std::domain_error("priors: sigma must be positive");
  if (!(s > 0.0)) throw std::domain_error("priors: s must be positive");
}

SymmetricPriors binary_response_priors(double mu, double sigma) {
  if (!(mu > 0.0 && mu < 1.0))
    throw std::domain_error("binary_response_priors: mu must lie in (0,1)");
  return SymmetricPriors{mu, sigma, std::sqrt(mu * (1.0 - mu))};
}

void TestDesign::validate() const {
  if (N < 1) throw std::domain_error("design: N must be positive");
  if (n1 < 0 || n2 < 0) throw std::domain_error("design: cells must be >= 0");
  if (n1 + n2 > N)
    throw std::domain_error("design: test cells exceed the population");
}

double optimal_n_symmetric(std::int64_t N, double s, double sigma) {
  if (N < 2) throw std::domain_error("optimal_n_symmetric: N must be >= 2");
  if (!(s > 0.0)) throw std::domain_error("optimal_n_symmetric: s must be positive");
  if (!(sigma > 0.0))
    throw std::domain_error("optimal_n_symmetric: sigma must be positive");
  double ratio2 = (s / sigma) * (s / sigma);
  double half = 0.75 * ratio2;
  return std::sqrt(static_cast<double>(N) / 4.0 * ratio2 + half * half) - half;
}

double expected_test_profit(const TestDesign& design,
                            const SymmetricPriors& priors) {
  design.validate();
  return static_cast<double>(design.n1 + design.n2) * priors.mu;
}

double expected_roll_profit(const TestDesign& design,
                            const SymmetricPriors& priors) {
  design.validate();
  priors.validate();
  double remaining = static_cast<double>(design.roll_count());
  // An empty cell means the deployment choice carries no information from the
  // test; only the base rate mu is earned.
  if (design.n1 == 0 || design.n2 == 0) return remaining * priors.mu;
  double sigma2 = priors.sigma * priors.sigma;
  double cell_term = static_cast<double>(design.n1 + design.n2) /
                     (static_cast<double>(design.n1) * static_cast<double>(design.n2));
  double incremental =
      kSqrt2 * sigma2 /
      (kSqrtPi * std::sqrt(2.0 * sigma2 + cell_term * priors.s2()));
  return remaining * (priors.mu + incremental);
}

TestDesign integerize_design(double n_star, std::int64_t N,
                             const SymmetricPriors& priors) {
  if (!(n_star >= 0.0) || 2.0 * n_star >= static_cast<double>(N))
    throw std::domain_error("integerize_design: need 0 <= n_star and 2*n_star < N");
  auto clamp_cell = [N](std::int64_t n) {
    return std::clamp<std::int64_t>(n, 0, N / 2);
  };
  std::int64_t lo = clamp_cell(static_cast<std::int64_t>(std::floor(n_star)));
  std::int64_t hi = clamp_cell(static_cast<std::int64_t>(std::ceil(n_star)));
  auto total = [&](std::int64_t n) {
    TestDesign d{N, n, n};
    return expected_test_profit(d, priors) + expected_roll_profit(d, priors);
  };
  std::int64_t best = (hi != lo && total(hi) > total(lo)) ? hi : lo;
  return TestDesign{N, best, best};
}

double total_error_rate(const TestDesign& design, const SymmetricPriors& priors) {
  design.validate();
  priors.validate();
  if (design.n1 == 0 || design.n2 == 0) return 0.5;
  double pooled = std::sqrt(static_cast<double>(design.n1) *
                            static_cast<double>(design.n2) /
                            static_cast<double>(design.n1 + design.n2));
  return 0.5 - std::atan(kSqrt2 * priors.sigma / priors.s * pooled) / kPi;
}

double conditional_error_rate(double m1, double m2, const TestDesign& design,
                              double s) {
  design.validate();
  if (design.n1 < 1 || design.n2 < 1)
    throw std::domain_error("conditional_error_rate: both cells must be >= 1");
  if (!(s > 0.0)) throw std::domain_error("conditional_error_rate: s must be positive");
  double se = s * std::sqrt(1.0 / static_cast<double>(design.n1) +
                            1.0 / static_cast<double>(design.n2));
  return 1.0 - normal_cdf((m2 - m1) / se);
}

double perfect_information_profit(std::int64_t N, const SymmetricPriors& priors) {
  priors.validate();
  return static_cast<double>(N) * (priors.mu + priors.sigma / kSqrtPi);
}

RegretResult expected_regret(const TestDesign& design,
                             const SymmetricPriors& priors) {
  design.validate();
  priors.validate();
  double pi_profit = perfect_information_profit(design.N, priors);
  double regret;
  if (design.n1 == design.n2) {
    double n = static_cast<double>(design.n1);
    double sigma = priors.sigma;
    double sigma2 = sigma * sigma;
    // posterior_sd -> sigma as n grows; n = 0 degenerates to the no-test case.
    double posterior_sd = n > 0 ? std::sqrt(sigma2 + priors.s2() / n)
                                : std::numeric_limits<double>::infinity();
    regret = static_cast<double>(design.N) * sigma / kSqrtPi *
                 (1.0 - sigma / posterior_sd) +
             (n > 0 ? 2.0 * n * sigma2 / (kSqrtPi * posterior_sd) : 0.0);
  } else {
    regret = pi_profit - expected_test_profit(design, priors) -
             expected_roll_profit(design, priors);
  }
  return RegretResult{regret, regret / pi_profit};
}

DesignReport evaluate_design(const TestDesign& design,
                             const SymmetricPriors& priors) {
  DesignReport report;
  report.test_profit = expected_test_profit(design, priors);
  report.roll_profit = expected_roll_profit(design, priors);
  report.total_profit = report.test_profit + report.roll_profit;
  report.error_rate = total_error_rate(design, priors);
  report.pi_profit = perfect_information_profit(design.N, priors);
  RegretResult r = expected_regret(design, priors);
  report.regret = r.regret;
  report.relative_regret = r.relative;
  return report;
}

}  // namespace testroll
