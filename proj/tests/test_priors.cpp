#include "testroll/priors.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "testroll/rng.hpp"

using namespace testroll;

namespace {

// Synthetic corpus of two-arm experiments from known hyperparameters.
std::vector<PastExperiment> simulate_corpus(int J, double mu, double sigma,
                                            double s, std::int64_t n_per_arm,
                                            std::uint64_t seed) {
  std::vector<PastExperiment> out;
  RngStream rng(seed, 0);
  for (int k = 0; k < J; ++k) {
    PastExperiment ex;
    ex.id = "exp" + std::to_string(k);
    for (int arm = 0; arm < 2; ++arm) {
      double m = rng.normal(mu, sigma);
      double ybar = rng.normal(m, s / std::sqrt(static_cast<double>(n_per_arm)));
      ex.arms.push_back(ArmObservation{n_per_arm, ybar, s});
    }
    out.push_back(ex);
  }
  return out;
}

}  // namespace

TEST_CASE("recovers hyperparameters from a simulated corpus") {
  auto corpus = simulate_corpus(200, 0.68, 0.03, 0.466, 5000, 101);
  PriorEstimate est = estimate_symmetric_priors(corpus, 0.466);
  CHECK(std::fabs(est.priors.mu - 0.68) < 0.005);
  CHECK(std::fabs(est.priors.sigma - 0.03) < 0.2 * 0.03);
  CHECK(!est.sigma_truncated);
  CHECK(est.priors.s == 0.466);
}

TEST_CASE("recovery error shrinks with more experiments") {
  double err_small = 0.0, err_large = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto small = simulate_corpus(50, 0.68, 0.03, 0.466, 5000, seed);
    auto large = simulate_corpus(500, 0.68, 0.03, 0.466, 5000, seed);
    err_small += std::fabs(
        estimate_symmetric_priors(small, 0.466).priors.sigma - 0.03);
    err_large += std::fabs(
        estimate_symmetric_priors(large, 0.466).priors.sigma - 0.03);
  }
  CHECK(err_large < err_small);
}

TEST_CASE("identical arms truncate sigma to zero with a warning") {
  std::vector<PastExperiment> experiments;
  for (int k = 0; k < 5; ++k) {
    experiments.push_back(PastExperiment{
        "e" + std::to_string(k),
        {ArmObservation{1000000, 0.5, 0.1}, ArmObservation{1000000, 0.5, 0.1}}});
  }
  PriorEstimate est = estimate_symmetric_priors(experiments, 0.1);
  CHECK(est.sigma_truncated);
  CHECK(est.priors.sigma == 0.0);
}

TEST_CASE("too few experiments is an error") {
  auto corpus = simulate_corpus(2, 0.68, 0.03, 0.466, 100, 7);
  CHECK_THROWS_AS(estimate_symmetric_priors(corpus, 0.466),
                  std::invalid_argument);
}

TEST_CASE("s pools from the sd column when not overridden") {
  auto corpus = simulate_corpus(20, 1.0, 0.2, 2.0, 400, 11);
  PriorEstimate est = estimate_symmetric_priors(corpus);
  CHECK(est.priors.s == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("missing sd data without an override is an error") {
  auto corpus = simulate_corpus(5, 1.0, 0.2, 2.0, 400, 13);
  for (auto& ex : corpus)
    for (auto& arm : ex.arms) arm.sd.reset();
  CHECK_THROWS_AS(estimate_symmetric_priors(corpus), std::invalid_argument);
  CHECK_NOTHROW(estimate_symmetric_priors(corpus, 2.0));
}

TEST_CASE("csv round trip") {
  std::string csv =
      "experiment_id,arm_id,n,mean,sd\n"
      "a,1,100,0.5,0.2\n"
      "a,2,120,0.6,0.25\n"
      "b,1,90,0.4,\n"
      "b,2,80,0.45,0.3\n";
  std::istringstream in(csv);
  auto experiments = read_experiments_csv(in);
  REQUIRE(experiments.size() == 2);
  CHECK(experiments[0].id == "a");
  REQUIRE(experiments[0].arms.size() == 2);
  CHECK(experiments[0].arms[1].n == 120);
  CHECK(experiments[0].arms[1].mean == doctest::Approx(0.6));
  CHECK(!experiments[1].arms[0].sd.has_value());
  CHECK(experiments[1].arms[1].sd == doctest::Approx(0.3));
}

TEST_CASE("csv header and field errors carry line numbers") {
  std::istringstream missing("experiment_id,arm_id,n\n");
  CHECK_THROWS_WITH_AS(read_experiments_csv(missing),
                       doctest::Contains("missing column 'mean'"), CsvError);

  std::istringstream bad_n(
      "experiment_id,arm_id,n,mean\n"
      "a,1,100,0.5\n"
      "a,2,-3,0.6\n");
  try {
    read_experiments_csv(bad_n);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.line_number == 3);
  }

  std::istringstream bad_mean(
      "experiment_id,arm_id,n,mean\n"
      "a,1,100,zebra\n");
  try {
    read_experiments_csv(bad_mean);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.line_number == 2);
    CHECK(std::string(e.what()).find("mean") != std::string::npos);
  }
}

TEST_CASE("experiments with more than two arms contribute all arms to mu") {
  std::vector<PastExperiment> experiments;
  for (int k = 0; k < 4; ++k) {
    PastExperiment ex{"e" + std::to_string(k), {}};
    ex.arms.push_back(ArmObservation{100, 0.5, 0.1});
    ex.arms.push_back(ArmObservation{100, 0.7, 0.1});
    ex.arms.push_back(ArmObservation{200, 0.9, 0.1});  // third arm, heavier
    experiments.push_back(ex);
  }
  PriorEstimate est = estimate_symmetric_priors(experiments, 0.1);
  // Weighted grand mean (100*0.5 + 100*0.7 + 200*0.9) / 400 = 0.75.
  CHECK(est.priors.mu == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("experiments with one arm are rejected by the estimator") {
  std::vector<PastExperiment> experiments = {
      {"a", {ArmObservation{10, 0.5, 0.1}, ArmObservation{10, 0.6, 0.1}}},
      {"b", {ArmObservation{10, 0.5, 0.1}, ArmObservation{10, 0.6, 0.1}}},
      {"c", {ArmObservation{10, 0.5, 0.1}}}};
  CHECK_THROWS_AS(estimate_symmetric_priors(experiments, 0.1),
                  std::invalid_argument);
}
