#include "testroll/beta_binomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "testroll/errors.hpp"
#include "testroll/numerics.hpp"

namespace testroll {

namespace {

constexpr std::int64_t kMaxCell = 100000;

// Beta-binomial log masses for y = 0..n under a Beta(a, b) prior.
std::vector<double> log_masses(std::int64_t n, double a, double b) {
  std::vector<double> lm(static_cast<std::size_t>(n) + 1);
  double ln_beta_ab = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  double ln_norm = log_gamma(static_cast<double>(n) + 1.0) - ln_beta_ab -
                   log_gamma(static_cast<double>(n) + a + b);
  for (std::int64_t y = 0; y <= n; ++y) {
    double yd = static_cast<double>(y);
    double nd = static_cast<double>(n);
    lm[static_cast<std::size_t>(y)] =
        ln_norm - log_gamma(yd + 1.0) - log_gamma(nd - yd + 1.0) +
        log_gamma(yd + a) + log_gamma(nd - yd + b);
  }
  return lm;
}

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void BetaBinomialSpec::validate() const {
  if (N < 1) throw std::domain_error("beta-binomial: N must be positive");
  if (!(alpha > 0.0 && beta > 0.0))
    throw std::domain_error("beta-binomial: alpha and beta must be positive");
  if (!(v1 > 0.0 && v2 > 0.0))
    throw std::domain_error("beta-binomial: conversion values must be positive");
}

double bb_expected_test_profit(std::int64_t n1, std::int64_t n2,
                               const BetaBinomialSpec& spec) {
  spec.validate();
  if (n1 < 0 || n2 < 0) throw std::domain_error("beta-binomial: cells must be >= 0");
  return (static_cast<double>(n1) * spec.v1 + static_cast<double>(n2) * spec.v2) *
         spec.alpha / (spec.alpha + spec.beta);
}

double bb_decision_threshold(std::int64_t y2, std::int64_t n1, std::int64_t n2,
                             const BetaBinomialSpec& spec) {
  spec.validate();
  if (y2 < 0 || y2 > n2)
    throw std::domain_error("beta-binomial: y2 must lie in [0, n2]");
  double r = (spec.v2 / spec.v1) * (spec.alpha + spec.beta + static_cast<double>(n1)) /
             (spec.alpha + spec.beta + static_cast<double>(n2));
  return spec.alpha * (r - 1.0) + static_cast<double>(y2) * r;
}

double bb_expected_roll_profit(std::int64_t n1, std::int64_t n2,
                               const BetaBinomialSpec& spec) {
  spec.validate();
  if (n1 < 0 || n2 < 0) throw std::domain_error("beta-binomial: cells must be >= 0");
  if (n1 + n2 > spec.N)
    throw std::domain_error("beta-binomial: test cells exceed the population");
  if (n1 > kMaxCell || n2 > kMaxCell)
    throw ResourceLimitError("beta-binomial: cells above 1e5 exceed the runtime budget");

  double ab = spec.alpha + spec.beta;
  std::vector<double> lm1 = log_masses(n1, spec.alpha, spec.beta);
  std::vector<double> lm2 = log_masses(n2, spec.alpha, spec.beta);

  // Prefix sums over y1 of mass and of mass-weighted posterior counts; the
  // inner sum for each y2 then splits at the decision threshold in O(1).
  std::vector<double> mass_below(lm1.size() + 1), value_below(lm1.size() + 1);
  KahanSum mass_acc, value_acc;
  mass_below[0] = 0.0;
  value_below[0] = 0.0;
  for (std::size_t y1 = 0; y1 < lm1.size(); ++y1) {
    double mass = std::exp(lm1[y1]);
    mass_acc.add(mass);
    value_acc.add(mass * (spec.alpha + static_cast<double>(y1)));
    mass_below[y1 + 1] = mass_acc.sum;
    value_below[y1 + 1] = value_acc.sum;
  }
  double value_total = value_below.back();

  double pm1_denom = ab + static_cast<double>(n1);
  double pm2_denom = ab + static_cast<double>(n2);
  KahanSum outer;
  for (std::int64_t y2 = 0; y2 <= n2; ++y2) {
    double threshold = bb_decision_threshold(y2, n1, n2, spec);
    // Deploy arm 1 for y1 >= threshold; k is the first such integer outcome.
    std::int64_t k = static_cast<std::int64_t>(std::ceil(threshold));
    k = std::clamp<std::int64_t>(k, 0, n1 + 1);
    std::size_t ki = static_cast<std::size_t>(k);
    double arm1_part = spec.v1 / pm1_denom * (value_total - value_below[ki]);
    double pm2 = spec.v2 * (spec.alpha + static_cast<double>(y2)) / pm2_denom;
    double arm2_part = mass_below[ki] * pm2;
    outer.add(std::exp(lm2[static_cast<std::size_t>(y2)]) *
              (arm1_part + arm2_part));
  }
  return static_cast<double>(spec.N - n1 - n2) * outer.sum;
}

namespace {

double bb_total_profit(std::int64_t n, const BetaBinomialSpec& spec) {
  return bb_expected_test_profit(n, n, spec) + bb_expected_roll_profit(n, n, spec);
}

}  // namespace

TestDesign bb_optimal_design(const BetaBinomialSpec& spec, std::int64_t n_max) {
  spec.validate();
  if (n_max < 0 || 2 * n_max > spec.N)
    throw std::domain_error("bb_optimal_design: need 0 <= n_max <= N/2");

  auto argmax_range = [&](std::int64_t lo, std::int64_t hi) {
    std::int64_t best = lo;
    double best_val = bb_total_profit(lo, spec);
    for (std::int64_t n = lo + 1; n <= hi; ++n) {
      double val = bb_total_profit(n, spec);
      if (val > best_val) {
        best_val = val;
        best = n;
      }
    }
    return best;
  };

  std::int64_t best;
  if (n_max <= 2000) {
    best = argmax_range(0, n_max);
  } else {
    // Coarse scan to bracket the peak, golden-section inside the bracket,
    // then an exhaustive sweep around the bracket optimum.
    const int coarse_points = 33;
    std::int64_t coarse_best = 0;
    double coarse_val = bb_total_profit(0, spec);
    std::int64_t step = std::max<std::int64_t>(1, n_max / (coarse_points - 1));
    for (std::int64_t n = step; n <= n_max; n += step) {
      double val = bb_total_profit(n, spec);
      if (val > coarse_val) {
        coarse_val = val;
        coarse_best = n;
      }
    }
    std::int64_t lo = std::max<std::int64_t>(0, coarse_best - step);
    std::int64_t hi = std::min(n_max, coarse_best + step);
    const double inv_golden = 0.6180339887498949;
    while (hi - lo > 10) {
      std::int64_t m1 = lo + static_cast<std::int64_t>(
                                 std::floor((hi - lo) * (1.0 - inv_golden)));
      std::int64_t m2 = lo + static_cast<std::int64_t>(
                                 std::floor((hi - lo) * inv_golden));
      if (m1 == m2) ++m2;
      if (bb_total_profit(m1, spec) < bb_total_profit(m2, spec))
        lo = m1;
      else
        hi = m2;
    }
    std::int64_t bracket_best = argmax_range(lo, hi);
    best = argmax_range(std::max<std::int64_t>(0, bracket_best - 5),
                        std::min(n_max, bracket_best + 5));
  }
  return TestDesign{spec.N, best, best};
}

NormalApprox bb_to_normal_approx(double alpha, double beta) {
  if (!(alpha > 0.0 && beta > 0.0))
    throw std::domain_error("bb_to_normal_approx: alpha and beta must be positive");
  double mu = alpha / (alpha + beta);
  double s = std::sqrt(mu * (1.0 - mu));
  double sigma = std::sqrt(alpha * beta /
                           ((alpha + beta) * (alpha + beta) * (alpha + beta + 1.0)));
  return NormalApprox{mu, s, sigma};
}

double bb_perfect_information_profit(const BetaBinomialSpec& spec) {
  spec.validate();
  // E[max(v1 p1, v2 p2)] = integral of the survival function
  // 1 - F1(t/v1) F2(t/v2) over t in [0, max(v1, v2)].
  double v_hi = std::max(spec.v1, spec.v2);
  auto survival = [&](double t) {
    double f1 = regularized_incomplete_beta(t / spec.v1, spec.alpha, spec.beta);
    double f2 = regularized_incomplete_beta(t / spec.v2, spec.alpha, spec.beta);
    return 1.0 - f1 * f2;
  };
  double expected_max =
      integrate_adaptive(survival, 0.0, v_hi, 1e-11 * v_hi);
  return static_cast<double>(spec.N) * expected_max;
}

DesignReport bb_evaluate_design(const TestDesign& design,
                                const BetaBinomialSpec& spec) {
  design.validate();
  if (design.N != spec.N)
    throw std::domain_error("bb_evaluate_design: design and spec disagree on N");
  DesignReport report;
  report.test_profit = bb_expected_test_profit(design.n1, design.n2, spec);
  report.roll_profit = bb_expected_roll_profit(design.n1, design.n2, spec);
  report.total_profit = report.test_profit + report.roll_profit;
  report.error_rate = std::nullopt;
  report.pi_profit = bb_perfect_information_profit(spec);
  report.regret = report.pi_profit - report.total_profit;
  report.relative_regret = report.regret / report.pi_profit;
  return report;
}

}  // namespace testroll
