#pragma once

#include <cstdint>
#include <optional>

namespace testroll {

/// Inputs for classical two-sample sample-size rules.
struct HTParams {
  double alpha = 0.05;           // type-I rate
  double power = 0.8;            // 1 - beta
  double d = 0.0;                // minimum detectable effect
  double s1 = 0.0;               // response sd, arm 1
  double s2 = 0.0;               // response sd, arm 2 (equal-variance rules use s1)
  std::optional<std::int64_t> N; // population, required for the FPC rule

  void validate() const;
};

/// Per-cell size for the standard two-sample z-test,
/// ceil((z_{1-alpha/2} + z_{power})^2 * 2 s^2 / d^2), with s = s1 = s2.
std::int64_t n_hypothesis_test(const HTParams& params);

/// Per-cell size with the finite population correction:
/// ceil(2 N z^2 s^2 / ((N-1) d^2 + 4 s^2 z^2)).
std::int64_t n_hypothesis_test_fpc(const HTParams& params);

struct UnequalCells {
  std::int64_t n1;
  std::int64_t n2;
};

/// Minimal-total-size cells when the arms have unequal response variance:
/// n1 = ceil(z^2 (s1^2 + s1 s2) / d^2), n2 = ceil(z^2 (s1 s2 + s2^2) / d^2).
UnequalCells n_hypothesis_test_unequal(const HTParams& params);

}  // namespace testroll
