#include "testroll/numerics.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"

using namespace testroll;

TEST_CASE("normal_cdf known points") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::fabs(normal_cdf(40.0) - 1.0) < 1e-15);
  // Frozen from the quadrature oracle below.
  CHECK(std::fabs(normal_cdf(1.0) - 0.8413447460685429) < 1e-12);
}

TEST_CASE("normal_cdf agrees with quadrature of the density") {
  for (double x : {-6.0, -2.5, -1.0, -0.3, 0.7, 1.0, 2.2, 4.5}) {
    double ref = oracles::normal_cdf_quadrature(x);
    CHECK(std::fabs(normal_cdf(x) - ref) < 1e-12);
  }
}

TEST_CASE("normal_cdf rejects non-finite input") {
  CHECK_THROWS_AS(normal_cdf(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(normal_cdf(std::numeric_limits<double>::infinity()),
                  std::domain_error);
}

TEST_CASE("normal_cdf symmetry and monotonicity") {
  double prev = -1.0;
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    double p = normal_cdf(x);
    CHECK(p >= prev);
    prev = p;
    CHECK(std::fabs(p + normal_cdf(-x) - 1.0) < 1e-12);
  }
}

TEST_CASE("normal_quantile known points") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  // Frozen from bisection on normal_cdf.
  CHECK(std::fabs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.8) - 0.8416212335729143) < 1e-9);
}

TEST_CASE("normal_quantile matches bisection oracle") {
  auto cdf = [](double x) { return normal_cdf(x); };
  for (double p : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
    double ref = oracles::quantile_by_bisection(cdf, p);
    CHECK(std::fabs(normal_quantile(p) - ref) < 1e-8);
  }
}

TEST_CASE("normal_quantile hits the inverse tolerance") {
  for (double p : {1e-12, 1e-6, 0.02, 0.3, 0.5, 0.77, 0.9999, 1.0 - 1e-10}) {
    CHECK(std::fabs(normal_cdf(normal_quantile(p)) - p) <= 1e-10);
  }
}

TEST_CASE("normal_quantile round-trips the CDF") {
  for (double x = -6.0; x <= 6.0; x += 0.5) {
    CHECK(std::fabs(normal_quantile(normal_cdf(x)) - x) < 1e-8);
  }
}

TEST_CASE("normal_quantile rejects out-of-range p") {
  for (double p : {0.0, 1.0, -0.1, 1.1, std::nan("")}) {
    CHECK_THROWS_AS(normal_quantile(p), std::domain_error);
  }
}

TEST_CASE("log_gamma known points") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-14));
  // ln Gamma(1/2) = ln sqrt(pi), frozen from the closed form.
  CHECK(std::fabs(log_gamma(0.5) - 0.5723649429247001) < 1e-13);
}

TEST_CASE("log_gamma recurrence Gamma(x+1) = x Gamma(x)") {
  for (double x : {0.5, 1.0, 5.0, 50.0, 500.0}) {
    double ratio = std::exp(log_gamma(x + 1.0) - log_gamma(x));
    CHECK(std::fabs(ratio - x) <= 1e-10 * x);
  }
}

TEST_CASE("log_gamma rejects non-positive input") {
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-1.5), std::domain_error);
}

TEST_CASE("regularized incomplete beta basics") {
  CHECK(regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  // Uniform prior: I_x(1,1) = x.
  for (double x : {0.1, 0.37, 0.5, 0.93}) {
    CHECK(std::fabs(regularized_incomplete_beta(x, 1.0, 1.0) - x) < 1e-12);
  }
  // Symmetry identity I_x(a,b) = 1 - I_{1-x}(b,a).
  CHECK(std::fabs(regularized_incomplete_beta(0.3, 2.5, 4.0) +
                  regularized_incomplete_beta(0.7, 4.0, 2.5) - 1.0) < 1e-12);
}

TEST_CASE("regularized incomplete beta agrees with density quadrature") {
  for (double a : {0.8, 2.0, 7.5}) {
    for (double b : {1.3, 5.0}) {
      for (double x : {0.15, 0.5, 0.85}) {
        double ln_b = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        auto density = [&](double t) {
          return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) -
                          ln_b);
        };
        double ref = oracles::integrate(density, 1e-12, x, 1e-12);
        CHECK(std::fabs(regularized_incomplete_beta(x, a, b) - ref) < 1e-9);
      }
    }
  }
}

TEST_CASE("adaptive integrator on analytic integrals") {
  double val = integrate_adaptive([](double x) { return x * x; }, 0.0, 3.0, 1e-12);
  CHECK(std::fabs(val - 9.0) < 1e-10);
  val = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12);
  CHECK(std::fabs(val - 2.0) < 1e-10);
}
