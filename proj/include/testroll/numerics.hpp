#pragma once

#include <functional>

namespace testroll {

/// Standard normal CDF Phi(x). Absolute error below 1e-12 over the full
/// double range. Throws std::domain_error for non-finite input.
double normal_cdf(double x);

/// Standard normal density phi(x).
double normal_pdf(double x);

/// Inverse of normal_cdf. Requires 0 < p < 1; the result x satisfies
/// |normal_cdf(x) - p| <= 1e-10.
double normal_quantile(double p);

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// Regularized incomplete beta function I_x(a, b) for a, b > 0.
/// Clamps x outside [0, 1] to the boundary values.
double regularized_incomplete_beta(double x, double a, double b);

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol);

}  // namespace testroll
