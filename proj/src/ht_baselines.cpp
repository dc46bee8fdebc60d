#include "testroll/ht_baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "testroll/numerics.hpp"

namespace testroll {

namespace {

double z_total(const HTParams& p) {
  return normal_quantile(1.0 - p.alpha / 2.0) + normal_quantile(p.power);
}

std::int64_t ceil_to_count(double x) {
  return static_cast<std::int64_t>(std::ceil(x));
}

}  // namespace

void HTParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("ht: alpha must lie in (0,1)");
  if (!(power > 0.0 && power < 1.0))
    throw std::domain_error("ht: power must lie in (0,1)");
  if (!(d > 0.0)) throw std::domain_error("ht: d must be positive");
  if (!(s1 > 0.0)) throw std::domain_error("ht: s1 must be positive");
}

std::int64_t n_hypothesis_test(const HTParams& params) {
  params.validate();
  double z = z_total(params);
  return ceil_to_count(z * z * 2.0 * params.s1 * params.s1 / (params.d * params.d));
}

std::int64_t n_hypothesis_test_fpc(const HTParams& params) {
  params.validate();
  if (!params.N) throw std::domain_error("ht: FPC rule needs a population N");
  if (*params.N < 2) throw std::domain_error("ht: N must be >= 2");
  double N = static_cast<double>(*params.N);
  double z2 = z_total(params) * z_total(params);
  double s2 = params.s1 * params.s1;
  return ceil_to_count(2.0 * N * z2 * s2 /
                       ((N - 1.0) * params.d * params.d + 4.0 * s2 * z2));
}

UnequalCells n_hypothesis_test_unequal(const HTParams& params) {
  params.validate();
  if (!(params.s2 > 0.0)) throw std::domain_error("ht: s2 must be positive");
  double z2 = z_total(params) * z_total(params);
  double d2 = params.d * params.d;
  double cross = params.s1 * params.s2;
  return UnequalCells{
      ceil_to_count(z2 * (params.s1 * params.s1 + cross) / d2),
      ceil_to_count(z2 * (cross + params.s2 * params.s2) / d2)};
}

}  // namespace testroll
