#include "testroll/beta_binomial.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "testroll/errors.hpp"
#include "testroll/numerics.hpp"
#include "testroll/rng.hpp"

using namespace testroll;

namespace {

// Independent enumeration of the roll-stage expectation, with a configurable
// tie rule. Computes masses directly from lgamma, no shared code path with
// the prefix-sum implementation.
double enumerate_roll(std::int64_t n1, std::int64_t n2,
                      const BetaBinomialSpec& spec, bool tie_to_arm1) {
  auto log_mass = [&](std::int64_t y, std::int64_t n) {
    double a = spec.alpha, b = spec.beta;
    double yd = static_cast<double>(y), nd = static_cast<double>(n);
    return std::lgamma(nd + 1.0) - std::lgamma(yd + 1.0) -
           std::lgamma(nd - yd + 1.0) + std::lgamma(yd + a) +
           std::lgamma(nd - yd + b) - std::lgamma(a) - std::lgamma(b) +
           std::lgamma(a + b) - std::lgamma(nd + a + b);
  };
  double total = 0.0;
  for (std::int64_t y1 = 0; y1 <= n1; ++y1) {
    for (std::int64_t y2 = 0; y2 <= n2; ++y2) {
      double pm1 = spec.v1 * (spec.alpha + static_cast<double>(y1)) /
                   (spec.alpha + spec.beta + static_cast<double>(n1));
      double pm2 = spec.v2 * (spec.alpha + static_cast<double>(y2)) /
                   (spec.alpha + spec.beta + static_cast<double>(n2));
      bool deploy1 = tie_to_arm1 ? pm1 >= pm2 : pm1 > pm2;
      double value = deploy1 ? pm1 : pm2;
      total += std::exp(log_mass(y1, n1) + log_mass(y2, n2)) * value;
    }
  }
  return static_cast<double>(spec.N - n1 - n2) * total;
}

}  // namespace

TEST_CASE("test-stage profit") {
  BetaBinomialSpec spec{100, 2.0, 8.0, 5.0, 5.0};
  CHECK(bb_expected_test_profit(0, 0, spec) == 0.0);
  CHECK(bb_expected_test_profit(7, 3, spec) == doctest::Approx(10.0).epsilon(1e-12));
  BetaBinomialSpec uniform{100, 1.0, 1.0, 2.0, 1.0};
  CHECK(bb_expected_test_profit(10, 0, uniform) == doctest::Approx(10.0));
}

TEST_CASE("test-stage profit matches Monte Carlo") {
  BetaBinomialSpec spec{1000, 2.0, 8.0, 5.0, 5.0};
  RngStream rng(51, 0);
  const int R = 400000;
  double acc = 0.0;
  for (int r = 0; r < R; ++r) {
    // Beta(2,8) draw via order statistics of gamma pairs is overkill here;
    // use the fact that Beta(a,b) = Ga/(Ga+Gb) with gamma draws approximated
    // by summed exponentials for integer shapes.
    double g1 = 0.0, g2 = 0.0;
    for (int i = 0; i < 2; ++i) g1 += -std::log(1.0 - rng.uniform01());
    for (int i = 0; i < 8; ++i) g2 += -std::log(1.0 - rng.uniform01());
    double p = g1 / (g1 + g2);
    // Binomial(7, p) and Binomial(3, p) conversions at value 5 each.
    int conv = 0;
    for (int i = 0; i < 10; ++i) conv += rng.uniform01() < p ? 1 : 0;
    acc += 5.0 * conv;
  }
  double mc = acc / R;
  double closed = bb_expected_test_profit(7, 3, spec);
  CHECK(std::fabs(mc - closed) < 0.05);  // ~3 se at this R
}

TEST_CASE("decision threshold") {
  BetaBinomialSpec sym{100, 3.0, 5.0, 2.0, 2.0};
  for (std::int64_t y2 : {0LL, 3LL, 10LL}) {
    CHECK(bb_decision_threshold(y2, 10, 10, sym) ==
          doctest::Approx(static_cast<double>(y2)).epsilon(1e-12));
  }
  BetaBinomialSpec doubled{100, 1.0, 1.0, 1.0, 2.0};
  CHECK(bb_decision_threshold(3, 10, 10, doubled) == doctest::Approx(7.0));
  // Crossover confirmed by direct posterior-mean comparison.
  auto pm1 = [&](std::int64_t y1) { return 1.0 * (1.0 + y1) / 12.0; };
  double pm2 = 2.0 * (1.0 + 3.0) / 12.0;
  CHECK(pm1(7) >= pm2);
  CHECK(pm1(6) < pm2);
  CHECK_THROWS_AS(bb_decision_threshold(11, 10, 10, sym), std::domain_error);
}

TEST_CASE("four-outcome enumeration is exact") {
  // n1 = n2 = 1 with a uniform prior: each count is 0 or 1 with mass 1/2,
  // posterior means (1 + y)/3, ties to arm 1. Expected deployed mean is
  // (1/3 + 2/3 + 2/3 + 2/3) / 4 = 7/12.
  BetaBinomialSpec spec{10, 1.0, 1.0, 1.0, 1.0};
  double expected = (10.0 - 2.0) * 7.0 / 12.0;
  CHECK(std::fabs(bb_expected_roll_profit(1, 1, spec) - expected) < 1e-12);
}

TEST_CASE("deciding from the prior alone") {
  BetaBinomialSpec spec{10, 2.0, 6.0, 3.0, 3.0};
  CHECK(bb_expected_roll_profit(0, 0, spec) ==
        doctest::Approx(10.0 * 3.0 * 0.25).epsilon(1e-12));
  // Unequal values: the higher-value arm is deployed from the prior.
  BetaBinomialSpec tilted{10, 2.0, 6.0, 1.0, 3.0};
  CHECK(bb_expected_roll_profit(0, 0, tilted) ==
        doctest::Approx(10.0 * 3.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("roll profit matches the independent enumeration") {
  RngStream rng(53, 0);
  for (int trial = 0; trial < 25; ++trial) {
    BetaBinomialSpec spec{1000,
                          0.3 + rng.uniform01() * 5.0,
                          0.3 + rng.uniform01() * 5.0,
                          0.2 + rng.uniform01() * 3.0,
                          0.2 + rng.uniform01() * 3.0};
    std::int64_t n1 = static_cast<std::int64_t>(rng.uniform01() * 25);
    std::int64_t n2 = static_cast<std::int64_t>(rng.uniform01() * 25);
    double direct = enumerate_roll(n1, n2, spec, true);
    double fast = bb_expected_roll_profit(n1, n2, spec);
    CHECK(std::fabs(fast - direct) <= 1e-11 * std::max(1.0, std::fabs(direct)));
  }
}

TEST_CASE("tie rule does not change the expectation") {
  // Symmetric specs make exact posterior ties reachable.
  for (std::int64_t n : {1LL, 5LL, 12LL}) {
    BetaBinomialSpec spec{500, 1.0, 1.0, 1.0, 1.0};
    double to_arm1 = enumerate_roll(n, n, spec, true);
    double to_arm2 = enumerate_roll(n, n, spec, false);
    CHECK(std::fabs(to_arm1 - to_arm2) < 1e-12 * std::max(1.0, to_arm1));
    CHECK(std::fabs(bb_expected_roll_profit(n, n, spec) - to_arm1) <
          1e-11 * std::max(1.0, to_arm1));
  }
}

TEST_CASE("beta-binomial masses sum to one") {
  for (double a : {0.5, 1.0, 4.0}) {
    for (double b : {0.5, 2.0, 9.0}) {
      for (std::int64_t n : {1LL, 17LL, 400LL, 5000LL}) {
        double total = 0.0;
        for (std::int64_t y = 0; y <= n; ++y) {
          double yd = static_cast<double>(y), nd = static_cast<double>(n);
          total += std::exp(std::lgamma(nd + 1.0) - std::lgamma(yd + 1.0) -
                            std::lgamma(nd - yd + 1.0) + std::lgamma(yd + a) +
                            std::lgamma(nd - yd + b) - std::lgamma(a) -
                            std::lgamma(b) + std::lgamma(a + b) -
                            std::lgamma(nd + a + b));
        }
        CHECK(std::fabs(total - 1.0) < 1e-10);
      }
    }
  }
}

TEST_CASE("roll profit matches Monte Carlo for moderate cells") {
  RngStream rng(57, 0);
  BetaBinomialSpec spec{2000, 2.0, 5.0, 1.0, 1.5};
  std::int64_t n1 = 22, n2 = 30;
  double closed = bb_expected_roll_profit(n1, n2, spec);
  const int R = 1000000;
  double acc = 0.0, acc_sq = 0.0;
  for (int r = 0; r < R; ++r) {
    // Integer shapes: Beta(a,b) = Ga/(Ga+Gb) with gamma draws from summed
    // exponentials.
    auto draw_beta = [&]() {
      double ga = 0.0, gb = 0.0;
      for (int i = 0; i < 2; ++i) ga += -std::log(1.0 - rng.uniform01());
      for (int i = 0; i < 5; ++i) gb += -std::log(1.0 - rng.uniform01());
      return ga / (ga + gb);
    };
    double p1 = draw_beta(), p2 = draw_beta();
    std::int64_t y1 = 0, y2 = 0;
    for (std::int64_t i = 0; i < n1; ++i) y1 += rng.uniform01() < p1 ? 1 : 0;
    for (std::int64_t i = 0; i < n2; ++i) y2 += rng.uniform01() < p2 ? 1 : 0;
    double threshold = bb_decision_threshold(y2, n1, n2, spec);
    double value = static_cast<double>(y1) >= threshold ? spec.v1 * p1 : spec.v2 * p2;
    acc += value;
    acc_sq += value * value;
  }
  double mean = acc / R;
  double se = std::sqrt((acc_sq / R - mean * mean) / (R - 1.0));
  double scale = static_cast<double>(spec.N - n1 - n2);
  CHECK(std::fabs(closed - scale * mean) < 3.0 * scale * se);
}

TEST_CASE("optimal design agrees with exhaustive search at small N") {
  RngStream rng(59, 0);
  for (int trial = 0; trial < 4; ++trial) {
    BetaBinomialSpec spec{200, 0.5 + rng.uniform01() * 4.0,
                          0.5 + rng.uniform01() * 4.0, 1.0, 1.0};
    TestDesign d = bb_optimal_design(spec, 100);
    std::int64_t best = 0;
    double best_val = bb_expected_test_profit(0, 0, spec) +
                      bb_expected_roll_profit(0, 0, spec);
    for (std::int64_t n = 1; n <= 100; ++n) {
      double val = bb_expected_test_profit(n, n, spec) +
                   bb_expected_roll_profit(n, n, spec);
      if (val > best_val) {
        best_val = val;
        best = n;
      }
    }
    CHECK(d.n1 == best);
  }
}

TEST_CASE("normal approximation of the Beta prior") {
  NormalApprox approx = bb_to_normal_approx(50.0, 50.0);
  CHECK(approx.mu == doctest::Approx(0.5));
  CHECK(approx.s == doctest::Approx(0.5));
  CHECK(approx.sigma == doctest::Approx(0.04975185951).epsilon(1e-9));

  NormalApprox uniform = bb_to_normal_approx(1.0, 1.0);
  CHECK(uniform.mu == doctest::Approx(0.5));
  CHECK(uniform.sigma == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-12));

  // Round trip: recover (alpha, beta) from (mu, sigma) and match.
  double mu = 0.68, sigma = 0.03;
  double precision = mu * (1.0 - mu) / (sigma * sigma) - 1.0;
  NormalApprox round = bb_to_normal_approx(mu * precision, (1.0 - mu) * precision);
  CHECK(round.mu == doctest::Approx(mu).epsilon(1e-9));
  CHECK(round.sigma == doctest::Approx(sigma).epsilon(1e-6));
}

TEST_CASE("moments of the normal approximation match Beta draws") {
  RngStream rng(61, 0);
  const int R = 1000000;
  // Beta(50,50) via gamma sums is integer-shape friendly.
  double acc = 0.0, acc_sq = 0.0;
  for (int r = 0; r < R; ++r) {
    double g1 = 0.0, g2 = 0.0;
    for (int i = 0; i < 50; ++i) {
      g1 += -std::log(1.0 - rng.uniform01());
      g2 += -std::log(1.0 - rng.uniform01());
    }
    double p = g1 / (g1 + g2);
    acc += p;
    acc_sq += p * p;
  }
  double mean = acc / R;
  double sd = std::sqrt(acc_sq / R - mean * mean);
  NormalApprox approx = bb_to_normal_approx(50.0, 50.0);
  CHECK(std::fabs(mean - approx.mu) < 3.0 * approx.sigma / std::sqrt(R));
  CHECK(std::fabs(sd - approx.sigma) < 5e-4);
}

TEST_CASE("cross-model check against the normal closed form") {
  // Map the website fixture onto a Beta prior of matched moments.
  double mu = 0.68, sigma = 0.03;
  double precision = mu * (1.0 - mu) / (sigma * sigma) - 1.0;
  BetaBinomialSpec spec{100000, mu * precision, (1.0 - mu) * precision, 1.0, 1.0};
  CHECK(spec.alpha + spec.beta == doctest::Approx(240.8).epsilon(0.01));
  TestDesign bb = bb_optimal_design(spec, 5000);
  CHECK(std::fabs(static_cast<double>(bb.n1) - 2284.0) / 2284.0 < 0.10);
}

TEST_CASE("rare conversions need more samples than the normal approximation") {
  BetaBinomialSpec spec{10000, 1.0, 99.0, 1.0, 1.0};
  TestDesign bb = bb_optimal_design(spec, 5000);
  NormalApprox approx = bb_to_normal_approx(1.0, 99.0);
  TestDesign nn = integerize_design(
      optimal_n_symmetric(10000, approx.s, approx.sigma), 10000,
      SymmetricPriors{approx.mu, approx.sigma, approx.s});
  CHECK(nn.n1 < bb.n1);
}

TEST_CASE("perfect information profit via quadrature matches Monte Carlo") {
  BetaBinomialSpec spec{1000, 2.0, 5.0, 1.0, 1.5};
  double closed = bb_perfect_information_profit(spec);
  RngStream rng(63, 0);
  const int R = 500000;
  double acc = 0.0, acc_sq = 0.0;
  for (int r = 0; r < R; ++r) {
    double g1a = -std::log(1.0 - rng.uniform01()) - std::log(1.0 - rng.uniform01());
    double g1b = 0.0;
    for (int i = 0; i < 5; ++i) g1b += -std::log(1.0 - rng.uniform01());
    double p1 = g1a / (g1a + g1b);
    double g2a = -std::log(1.0 - rng.uniform01()) - std::log(1.0 - rng.uniform01());
    double g2b = 0.0;
    for (int i = 0; i < 5; ++i) g2b += -std::log(1.0 - rng.uniform01());
    double p2 = g2a / (g2a + g2b);
    double v = std::max(1.0 * p1, 1.5 * p2);
    acc += v;
    acc_sq += v * v;
  }
  double mean = acc / R;
  double se = std::sqrt((acc_sq / R - mean * mean) / (R - 1.0));
  CHECK(std::fabs(closed / 1000.0 - mean) < 3.0 * se);
}

TEST_CASE("resource and domain guards") {
  BetaBinomialSpec spec{10000000, 1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(bb_expected_roll_profit(200000, 10, spec), ResourceLimitError);
  BetaBinomialSpec small{10, 1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(bb_expected_roll_profit(8, 8, small), std::domain_error);
  CHECK_THROWS_AS(bb_optimal_design(small, 8), std::domain_error);
  BetaBinomialSpec bad{10, -1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(bb_expected_test_profit(1, 1, bad), std::domain_error);
}
