#include "testroll/nn_asymmetric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "testroll/numerics.hpp"

namespace testroll {

namespace {
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
}  // namespace

void ArmPrior::validate() const {
  if (!std::isfinite(mu)) throw std::domain_error("arm prior: mu must be finite");
  if (!(sigma > 0.0)) throw std::domain_error("arm prior: sigma must be positive");
  if (!(s > 0.0)) throw std::domain_error("arm prior: s must be positive");
}

void AsymmetricProblem::validate() const {
  if (N < 2) throw std::domain_error("problem: N must be >= 2");
  arm1.validate();
  arm2.validate();
}

int posterior_mean_decision(double ybar1, std::int64_t n1, double ybar2,
                            std::int64_t n2, const AsymmetricProblem& problem) {
  problem.validate();
  if (n1 < 0 || n2 < 0) throw std::domain_error("decision: cells must be >= 0");
  auto posterior_mean = [](const ArmPrior& arm, double ybar, std::int64_t n) {
    if (n == 0) return arm.mu;
    double prior_prec = 1.0 / (arm.sigma * arm.sigma);
    double data_prec = static_cast<double>(n) / (arm.s * arm.s);
    return (arm.mu * prior_prec + ybar * data_prec) / (prior_prec + data_prec);
  };
  double pm1 = posterior_mean(problem.arm1, ybar1, n1);
  double pm2 = posterior_mean(problem.arm2, ybar2, n2);
  return pm1 >= pm2 ? 1 : 2;
}

namespace {

// Ex-ante variance of an arm's posterior mean; zero for an untested arm.
double posterior_mean_variance(const ArmPrior& arm, double n) {
  if (n <= 0.0) return 0.0;
  double sigma2 = arm.sigma * arm.sigma;
  return sigma2 * sigma2 / (sigma2 + arm.s * arm.s / n);
}

double roll_per_customer(double n1, double n2, const AsymmetricProblem& pb) {
  double v = std::sqrt(posterior_mean_variance(pb.arm1, n1) +
                       posterior_mean_variance(pb.arm2, n2));
  double e = pb.arm2.mu - pb.arm1.mu;
  // v -> 0 is the decide-from-the-prior limit (also covers e/v overflow).
  if (v == 0.0 || !std::isfinite(e / v)) return std::max(pb.arm1.mu, pb.arm2.mu);
  return pb.arm1.mu + e * normal_cdf(e / v) + v * normal_pdf(e / v);
}

}  // namespace

ProfitBreakdown expected_profit_asymmetric(double n1, double n2,
                                           const AsymmetricProblem& problem) {
  problem.validate();
  if (!(n1 >= 0.0) || !(n2 >= 0.0))
    throw std::domain_error("profit: cells must be >= 0");
  if (n1 + n2 > static_cast<double>(problem.N))
    throw std::domain_error("profit: test cells exceed the population");
  double test = problem.arm1.mu * n1 + problem.arm2.mu * n2;
  double roll = (static_cast<double>(problem.N) - n1 - n2) *
                roll_per_customer(n1, n2, problem);
  return ProfitBreakdown{test, roll, test + roll};
}

namespace {

struct Point {
  double x, y;
};

// Nelder-Mead on the clamped objective; eval_budget is decremented per call.
Point nelder_mead(const std::function<double(double, double)>& f, Point start,
                  double step, int max_iter, long& eval_budget) {
  std::array<Point, 3> simplex = {
      start, Point{start.x + step, start.y}, Point{start.x, start.y + step}};
  std::array<double, 3> values;
  for (int i = 0; i < 3; ++i) {
    values[i] = f(simplex[i].x, simplex[i].y);
    --eval_budget;
  }
  auto order = [&]() {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return values[a] < values[b]; });
    std::array<Point, 3> sp;
    std::array<double, 3> sv;
    for (int i = 0; i < 3; ++i) {
      sp[i] = simplex[idx[i]];
      sv[i] = values[idx[i]];
    }
    simplex = sp;
    values = sv;
  };
  for (int it = 0; it < max_iter && eval_budget > 0; ++it) {
    order();
    double diam = std::max(
        std::hypot(simplex[0].x - simplex[2].x, simplex[0].y - simplex[2].y),
        std::hypot(simplex[0].x - simplex[1].x, simplex[0].y - simplex[1].y));
    if (diam < 1e-6) break;
    Point centroid{0.5 * (simplex[0].x + simplex[1].x),
                   0.5 * (simplex[0].y + simplex[1].y)};
    auto along = [&](double t) {
      return Point{centroid.x + t * (centroid.x - simplex[2].x),
                   centroid.y + t * (centroid.y - simplex[2].y)};
    };
    Point refl = along(1.0);
    double f_refl = f(refl.x, refl.y);
    --eval_budget;
    if (f_refl < values[0]) {
      Point exp_pt = along(2.0);
      double f_exp = f(exp_pt.x, exp_pt.y);
      --eval_budget;
      if (f_exp < f_refl) {
        simplex[2] = exp_pt;
        values[2] = f_exp;
      } else {
        simplex[2] = refl;
        values[2] = f_refl;
      }
    } else if (f_refl < values[1]) {
      simplex[2] = refl;
      values[2] = f_refl;
    } else {
      Point contr = along(f_refl < values[2] ? 0.5 : -0.5);
      double f_contr = f(contr.x, contr.y);
      --eval_budget;
      if (f_contr < std::min(f_refl, values[2])) {
        simplex[2] = contr;
        values[2] = f_contr;
      } else {
        for (int i = 1; i < 3; ++i) {
          simplex[i] = Point{0.5 * (simplex[i].x + simplex[0].x),
                             0.5 * (simplex[i].y + simplex[0].y)};
          values[i] = f(simplex[i].x, simplex[i].y);
          --eval_budget;
        }
      }
    }
  }
  order();
  return simplex[0];
}

}  // namespace

TestDesign optimize_design_asymmetric(const AsymmetricProblem& problem) {
  problem.validate();
  const double N = static_cast<double>(problem.N);
  auto clamp_pair = [&](double& x, double& y) {
    x = std::clamp(x, 0.0, N);
    y = std::clamp(y, 0.0, N);
    if (x + y > N) {
      double excess = x + y - N;
      x -= excess / 2.0;
      y -= excess / 2.0;
      x = std::max(0.0, x);
      y = std::max(0.0, y);
    }
  };
  auto profit = [&](double x, double y) {
    clamp_pair(x, y);
    return expected_profit_asymmetric(x, y, problem).total;
  };
  auto neg_profit = [&](double x, double y) { return -profit(x, y); };

  long eval_budget = 100000;

  // Coarse lattice scan of the feasible triangle.
  Point coarse_best{0.0, 0.0};
  double coarse_val = profit(0.0, 0.0);
  --eval_budget;
  const int grid = 48;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid - i; ++j) {
      double x = N * static_cast<double>(i) / grid;
      double y = N * static_cast<double>(j) / grid;
      double val = profit(x, y);
      --eval_budget;
      if (val > coarse_val) {
        coarse_val = val;
        coarse_best = Point{x, y};
      }
    }
  }

  // Symmetric warm start from pooled parameters.
  double pooled_sigma = 0.5 * (problem.arm1.sigma + problem.arm2.sigma);
  double pooled_s = 0.5 * (problem.arm1.s + problem.arm2.s);
  double n_sym = optimal_n_symmetric(problem.N, pooled_s, pooled_sigma);

  std::vector<Point> starts = {coarse_best,
                               {n_sym, n_sym},
                               {1.0, N / 4.0},
                               {N / 4.0, 1.0},
                               {N / 16.0, N / 16.0}};
  Point best = coarse_best;
  double best_val = coarse_val;
  for (const Point& start : starts) {
    if (eval_budget <= 0) break;
    double step = std::max(2.0, N / 64.0);
    Point local = nelder_mead(neg_profit, start, step, 400, eval_budget);
    // Second pass with a small step to refine near the local optimum.
    local = nelder_mead(neg_profit, local, 2.0, 400, eval_budget);
    double val = profit(local.x, local.y);
    --eval_budget;
    if (val > best_val) {
      best_val = val;
      best = local;
    }
  }

  // Integer polish: exhaustive window around the continuous optimum, then
  // greedy +-1 moves in case the window clipped a shallow ridge.
  auto int_profit = [&](std::int64_t x, std::int64_t y) {
    if (x < 0 || y < 0 || x + y > problem.N)
      return -std::numeric_limits<double>::infinity();
    return expected_profit_asymmetric(static_cast<double>(x),
                                      static_cast<double>(y), problem)
        .total;
  };
  std::int64_t bx = static_cast<std::int64_t>(std::llround(best.x));
  std::int64_t by = static_cast<std::int64_t>(std::llround(best.y));
  std::int64_t cur_x = std::clamp<std::int64_t>(bx, 0, problem.N);
  std::int64_t cur_y = std::clamp<std::int64_t>(by, 0, problem.N - cur_x);
  double cur_val = int_profit(cur_x, cur_y);
  const std::int64_t window = 64;
  for (std::int64_t x = std::max<std::int64_t>(0, bx - window);
       x <= std::min(problem.N, bx + window); ++x) {
    for (std::int64_t y = std::max<std::int64_t>(0, by - window);
         y <= std::min(problem.N, by + window); ++y) {
      double val = int_profit(x, y);
      --eval_budget;
      if (val > cur_val) {
        cur_val = val;
        cur_x = x;
        cur_y = y;
      }
    }
  }
  bool improved = true;
  std::int64_t climb_steps = 0;
  while (improved && climb_steps < 20000 && eval_budget > 0) {
    improved = false;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        double val = int_profit(cur_x + dx, cur_y + dy);
        --eval_budget;
        if (val > cur_val) {
          cur_val = val;
          cur_x += dx;
          cur_y += dy;
          improved = true;
          ++climb_steps;
        }
      }
    }
  }
  TestDesign result{problem.N, cur_x, cur_y};
  if (eval_budget <= 0)
    throw OptimizationError("optimize_design_asymmetric: evaluation budget exceeded",
                            result, cur_val);
  return result;
}

double incumbent_test_threshold(double s, double sigma1, double c) {
  double c2 = c * c;
  return (2.0 * c2 * c2 - c2 - 1.0) * s * s / (c2 * sigma1 * sigma1);
}

CellSizes incumbent_challenger_n(std::int64_t N, double s, double sigma1,
                                 double c) {
  if (N < 2) throw std::domain_error("incumbent_challenger_n: N must be >= 2");
  if (!(s > 0.0)) throw std::domain_error("incumbent_challenger_n: s must be positive");
  if (!(sigma1 > 0.0))
    throw std::domain_error("incumbent_challenger_n: sigma1 must be positive");
  if (!(c > 1.0))
    throw std::domain_error(
        "incumbent_challenger_n: c must exceed 1 (equal spreads are the symmetric case)");
  double Nd = static_cast<double>(N);
  double c2 = c * c;
  double sig2 = sigma1 * sigma1;
  if (Nd <= incumbent_test_threshold(s, sigma1, c)) {
    // Incumbent cell is clamped to zero; the challenger cell solves the
    // one-arm trade-off 2 sigma2^2 n^2 + 3 s^2 n - N s^2 = 0.
    double sigma2sq = c2 * sig2;
    double s2 = s * s;
    double n2 = (std::sqrt(9.0 * s2 * s2 + 8.0 * Nd * sigma2sq * s2) - 3.0 * s2) /
                (4.0 * sigma2sq);
    return CellSizes{0.0, n2};
  }
  double root = std::sqrt(2.0 * c2 * (c2 + 1.0) * Nd * sig2 +
                          (2.0 * c2 * c2 + 5.0 * c2 + 2.0) * s * s);
  double n1 = s * (root - c * s * (1.0 + 2.0 * c2)) / (2.0 * (c2 * c + c) * sig2);
  double n2 = s * (c * root - (c2 + 2.0) * s) / (2.0 * c2 * (c2 + 1.0) * sig2);
  return CellSizes{n1, n2};
}

AsymmetricProblem pricing_to_priors(const PricingSpec& spec, std::int64_t N) {
  if (!(spec.p1 > 0.0 && spec.p2 > 0.0))
    throw std::domain_error("pricing: prices must be positive");
  if (spec.p1 == spec.p2)
    throw std::domain_error("pricing: the two candidate prices must differ");
  if (!(spec.sigma > 0.0)) throw std::domain_error("pricing: sigma must be positive");
  if (!(spec.s > 0.0)) throw std::domain_error("pricing: s must be positive");
  auto arm = [&](double p) {
    return ArmPrior{p * (spec.a - spec.mu * p), p * p * spec.sigma, p * spec.s};
  };
  AsymmetricProblem problem{N, arm(spec.p1), arm(spec.p2)};
  problem.validate();
  return problem;
}

double perfect_information_profit_asymmetric(const AsymmetricProblem& problem) {
  problem.validate();
  double w = std::hypot(problem.arm1.sigma, problem.arm2.sigma);
  double e = problem.arm2.mu - problem.arm1.mu;
  double per = problem.arm1.mu + e * normal_cdf(e / w) + w * normal_pdf(e / w);
  return static_cast<double>(problem.N) * per;
}

double error_rate_asymmetric(std::int64_t n1, std::int64_t n2,
                             const AsymmetricProblem& problem) {
  problem.validate();
  if (n1 < 0 || n2 < 0) throw std::domain_error("error rate: cells must be >= 0");
  const ArmPrior& a1 = problem.arm1;
  const ArmPrior& a2 = problem.arm2;
  double sig1sq = a1.sigma * a1.sigma, sig2sq = a2.sigma * a2.sigma;
  double var_v = sig1sq + sig2sq;
  double sd_v = std::sqrt(var_v);
  double mu_v = a1.mu - a2.mu;

  if (n1 == 0 && n2 == 0) {
    // Decision from the priors alone: error is the chance the lower-prior-mean
    // arm is actually better.
    double e = std::fabs(mu_v);
    return normal_cdf(-e / sd_v);
  }

  // Shrinkage weights of the posterior means; the deployment statistic is
  // U = a1 - a2 + b1 m1 - b2 m2 plus sampling noise of variance tau^2.
  auto shrink = [](const ArmPrior& arm, std::int64_t n) {
    if (n == 0) return 0.0;
    double sigma2 = arm.sigma * arm.sigma;
    return sigma2 / (sigma2 + arm.s * arm.s / static_cast<double>(n));
  };
  double b1 = shrink(a1, n1), b2 = shrink(a2, n2);
  double tau2 = sig1sq * b1 * (1.0 - b1) + sig2sq * b2 * (1.0 - b2);
  double mu_u = a1.mu - a2.mu;  // posterior means are unbiased ex ante
  double var_u = b1 * b1 * sig1sq + b2 * b2 * sig2sq;
  double cov_uv = b1 * sig1sq + b2 * sig2sq;

  // V = m1 - m2; error = P(deploy 1, V < 0) + P(deploy 2, V > 0), with
  // P(deploy 1 | V = v) = Phi(E[U|v] / sqrt(tau^2 + Var(U|v))).
  double cond_var = std::max(0.0, var_u - cov_uv * cov_uv / var_v);
  double denom = std::sqrt(tau2 + cond_var);
  auto p_deploy1 = [&](double v) {
    double cond_mean = mu_u + cov_uv / var_v * (v - mu_v);
    return normal_cdf(cond_mean / denom);
  };
  // Integrate over standardized v in fixed panels so the adaptive rule cannot
  // step across a transition that is narrow relative to the prior spread;
  // the interval splits at the sign change of V.
  double t0 = std::clamp((0.0 - mu_v) / sd_v, -12.0, 12.0);
  auto integrate_panels = [](const std::function<double(double)>& f, double a,
                             double b) {
    double total = 0.0;
    int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.25)));
    for (int i = 0; i < panels; ++i) {
      double lo = a + (b - a) * i / panels;
      double hi = a + (b - a) * (i + 1) / panels;
      total += integrate_adaptive(f, lo, hi, 1e-13);
    }
    return total;
  };
  auto lower = [&](double t) {  // V < 0: error if arm 1 deployed
    return normal_pdf(t) * p_deploy1(mu_v + sd_v * t);
  };
  auto upper = [&](double t) {  // V > 0: error if arm 2 deployed
    return normal_pdf(t) * (1.0 - p_deploy1(mu_v + sd_v * t));
  };
  double rate = integrate_panels(lower, -12.0, t0) +
                integrate_panels(upper, t0, 12.0);
  return std::clamp(rate, 0.0, 1.0);
}

DesignReport evaluate_design(const TestDesign& design,
                             const AsymmetricProblem& problem) {
  design.validate();
  if (design.N != problem.N)
    throw std::domain_error("evaluate_design: design and problem disagree on N");
  ProfitBreakdown profit = expected_profit_asymmetric(
      static_cast<double>(design.n1), static_cast<double>(design.n2), problem);
  DesignReport report;
  report.test_profit = profit.test;
  report.roll_profit = profit.roll;
  report.total_profit = profit.total;
  report.error_rate = error_rate_asymmetric(design.n1, design.n2, problem);
  report.pi_profit = perfect_information_profit_asymmetric(problem);
  report.regret = report.pi_profit - report.total_profit;
  report.relative_regret = report.regret / report.pi_profit;
  return report;
}

}  // namespace testroll
