#include "testroll/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "testroll/format.hpp"
#include "testroll/rng.hpp"

namespace testroll {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string kind_name(PolicySpec::Kind kind) {
  switch (kind) {
    case PolicySpec::Kind::test_roll: return "test_roll";
    case PolicySpec::Kind::thompson: return "thompson";
    case PolicySpec::Kind::random_choice: return "random";
    case PolicySpec::Kind::perfect_info: return "perfect_info";
    case PolicySpec::Kind::ht_deploy: return "ht_deploy";
  }
  return "unknown";
}

struct ReplicateOutcome {
  double profit;
  bool deploy_error;  // meaningful for test_roll / ht_deploy only
  double max_mean;    // best latent arm mean, for the regret bookkeeping
};

// Draw order per replicate is fixed: arm means first, then policy draws.
ReplicateTruth draw_truth(RngStream& rng, const std::vector<ArmPrior>& priors,
                          std::int64_t r) {
  ReplicateTruth truth;
  truth.replicate_index = r;
  truth.arm_means.resize(priors.size());
  for (std::size_t j = 0; j < priors.size(); ++j)
    truth.arm_means[j] = rng.normal(priors[j].mu, priors[j].sigma);
  return truth;
}

std::size_t argmax(const std::vector<double>& xs) {
  return static_cast<std::size_t>(
      std::max_element(xs.begin(), xs.end()) - xs.begin());
}

ReplicateOutcome run_test_roll(RngStream& rng, const std::vector<double>& truth,
                               const std::vector<ArmPrior>& priors,
                               const std::vector<std::int64_t>& cells,
                               std::int64_t N, bool prior_decision) {
  // Cell means are sufficient for the deployment decision; simulate them
  // directly as N(m_j, s_j^2 / n_j).
  std::size_t K = priors.size();
  std::vector<double> score(K);
  std::int64_t tested = 0;
  double test_profit = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    std::int64_t n = cells[j];
    tested += n;
    test_profit += static_cast<double>(n) * truth[j];
    if (n == 0) {
      score[j] = prior_decision ? priors[j].mu
                                : -std::numeric_limits<double>::infinity();
      continue;
    }
    double ybar = rng.normal(truth[j], priors[j].s / std::sqrt(static_cast<double>(n)));
    if (prior_decision) {
      double prior_prec = 1.0 / (priors[j].sigma * priors[j].sigma);
      double data_prec = static_cast<double>(n) / (priors[j].s * priors[j].s);
      score[j] = (priors[j].mu * prior_prec + ybar * data_prec) /
                 (prior_prec + data_prec);
    } else {
      score[j] = ybar;  // deploy the test winner
    }
  }
  std::size_t chosen = argmax(score);
  double profit = test_profit +
                  static_cast<double>(N - tested) * truth[chosen];
  return ReplicateOutcome{profit, chosen != argmax(truth), 0.0};
}

ReplicateOutcome run_thompson(RngStream& rng, const std::vector<double>& truth,
                              const std::vector<ArmPrior>& priors,
                              std::int64_t N, std::int64_t batch_size) {
  std::size_t K = priors.size();
  std::vector<ArmPosterior> post(K);
  for (std::size_t j = 0; j < K; ++j)
    post[j] = ArmPosterior{priors[j].mu, priors[j].sigma * priors[j].sigma};
  std::vector<double> pending_sum(K, 0.0);
  std::vector<std::int64_t> pending_count(K, 0);
  std::vector<double> sample(K);
  double profit = 0.0;
  std::int64_t since_flush = 0;
  auto flush = [&]() {
    for (std::size_t j = 0; j < K; ++j) {
      if (pending_count[j] == 0) continue;
      double s2 = priors[j].s * priors[j].s;
      double new_var =
          1.0 / (1.0 / post[j].var + static_cast<double>(pending_count[j]) / s2);
      post[j].mean =
          new_var * (post[j].mean / post[j].var + pending_sum[j] / s2);
      post[j].var = new_var;
      pending_sum[j] = 0.0;
      pending_count[j] = 0;
    }
    since_flush = 0;
  };
  for (std::int64_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < K; ++j)
      sample[j] = rng.normal(post[j].mean, std::sqrt(post[j].var));
    std::size_t chosen = argmax(sample);
    double reward = rng.normal(truth[chosen], priors[chosen].s);
    profit += reward;
    pending_sum[chosen] += reward;
    pending_count[chosen] += 1;
    if (++since_flush >= batch_size) flush();
  }
  flush();
  return ReplicateOutcome{profit, false, 0.0};
}

ReplicateOutcome run_replicate(const PolicySpec& policy,
                               const std::vector<ArmPrior>& priors,
                               const std::vector<std::int64_t>& cells,
                               std::int64_t N, std::int64_t r,
                               std::uint64_t seed) {
  RngStream rng(seed, static_cast<std::uint64_t>(r));
  std::vector<double> truth = draw_truth(rng, priors, r).arm_means;
  double max_mean = truth[argmax(truth)];
  ReplicateOutcome out{0.0, false, max_mean};
  switch (policy.kind) {
    case PolicySpec::Kind::test_roll:
      out = run_test_roll(rng, truth, priors, cells, N, /*prior_decision=*/true);
      break;
    case PolicySpec::Kind::ht_deploy:
      out = run_test_roll(rng, truth, priors, cells, N, /*prior_decision=*/false);
      break;
    case PolicySpec::Kind::thompson:
      out = run_thompson(rng, truth, priors, N, policy.batch_size);
      break;
    case PolicySpec::Kind::random_choice: {
      std::size_t j = static_cast<std::size_t>(rng.uniform_below(priors.size()));
      out = ReplicateOutcome{static_cast<double>(N) * truth[j], false, 0.0};
      break;
    }
    case PolicySpec::Kind::perfect_info:
      out = ReplicateOutcome{static_cast<double>(N) * max_mean, false, 0.0};
      break;
  }
  out.max_mean = max_mean;
  return out;
}

// Ex-ante perfect-information profit: closed form for two arms, otherwise
// Monte Carlo on a dedicated stream one past the replicate streams.
double pi_reference_profit(const std::vector<ArmPrior>& priors, std::int64_t N,
                           std::int64_t R, std::uint64_t seed) {
  if (priors.size() == 2)
    return perfect_information_profit_asymmetric(
        AsymmetricProblem{N, priors[0], priors[1]});
  RngStream rng(seed, static_cast<std::uint64_t>(R));
  const int draws = 200000;
  double acc = 0.0;
  std::vector<double> means(priors.size());
  for (int i = 0; i < draws; ++i) {
    for (std::size_t j = 0; j < priors.size(); ++j)
      means[j] = rng.normal(priors[j].mu, priors[j].sigma);
    acc += means[argmax(means)];
  }
  return static_cast<double>(N) * acc / draws;
}

}  // namespace

std::string PolicySpec::display_label() const {
  return label.empty() ? kind_name(kind) : label;
}

void thompson_step(std::vector<ArmPosterior>& posteriors, double reward,
                   std::size_t chosen_arm, double s) {
  if (chosen_arm >= posteriors.size())
    throw std::domain_error("thompson_step: chosen arm out of range");
  ArmPosterior& p = posteriors[chosen_arm];
  if (!(p.var > 0.0)) throw std::domain_error("thompson_step: variance must be positive");
  double s2 = s * s;
  double new_var = 1.0 / (1.0 / p.var + 1.0 / s2);
  p.mean = new_var * (p.mean / p.var + reward / s2);
  p.var = new_var;
}

SimResult simulate(const PolicySpec& policy, const std::vector<ArmPrior>& priors,
                   std::int64_t N, std::int64_t R, std::uint64_t seed,
                   int threads) {
  if (priors.size() < 2)
    throw std::domain_error("simulate: at least two arms are required");
  for (const ArmPrior& p : priors) p.validate();
  if (N < 1) throw std::domain_error("simulate: N must be positive");
  if (R < 1) throw std::domain_error("simulate: R must be >= 1");
  if (policy.kind == PolicySpec::Kind::thompson && policy.batch_size < 1)
    throw std::domain_error("simulate: thompson batch size must be >= 1");

  bool uses_cells = policy.kind == PolicySpec::Kind::test_roll ||
                    policy.kind == PolicySpec::Kind::ht_deploy;
  std::vector<std::int64_t> cells = policy.cells;
  bool capped = false;
  if (uses_cells) {
    if (cells.size() != priors.size())
      throw std::domain_error("simulate: one cell size per arm is required");
    for (std::int64_t n : cells)
      if (n < 0) throw std::domain_error("simulate: cell sizes must be >= 0");
    std::int64_t total = 0;
    for (std::int64_t n : cells) total += n;
    if (total > N) {
      if (policy.kind == PolicySpec::Kind::ht_deploy) {
        // Oversized baseline designs are run capped instead of rejected.
        std::int64_t cap = N / static_cast<std::int64_t>(priors.size());
        for (std::int64_t& n : cells) n = std::min(n, cap);
        capped = true;
      } else {
        throw std::domain_error("simulate: cell sizes exceed the population");
      }
    }
  }

  std::vector<double> profits(static_cast<std::size_t>(R));
  std::vector<unsigned char> errors(static_cast<std::size_t>(R), 0);
  std::vector<double> max_means(static_cast<std::size_t>(R));

  auto worker = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t r = lo; r < hi; ++r) {
      ReplicateOutcome out = run_replicate(policy, priors, cells, N, r, seed);
      profits[static_cast<std::size_t>(r)] = out.profit;
      errors[static_cast<std::size_t>(r)] = out.deploy_error ? 1 : 0;
      max_means[static_cast<std::size_t>(r)] = out.max_mean;
    }
  };
  int T = std::clamp<int>(threads, 1, static_cast<int>(std::min<std::int64_t>(R, 64)));
  if (T == 1) {
    worker(0, R);
  } else {
    std::vector<std::thread> pool;
    std::int64_t chunk = (R + T - 1) / T;
    for (int t = 0; t < T; ++t) {
      std::int64_t lo = t * chunk;
      std::int64_t hi = std::min<std::int64_t>(R, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }

  SimResult result;
  result.profits = std::move(profits);
  result.regrets.resize(static_cast<std::size_t>(R));
  result.cells_capped = capped;
  double sum = 0.0;
  for (std::size_t r = 0; r < result.profits.size(); ++r) {
    result.regrets[r] = static_cast<double>(N) * max_means[r] - result.profits[r];
    sum += result.profits[r];
  }
  result.mean_profit = sum / static_cast<double>(R);
  double sq = 0.0;
  for (double p : result.profits) {
    double d = p - result.mean_profit;
    sq += d * d;
  }
  result.mc_standard_error =
      R > 1 ? std::sqrt(sq / static_cast<double>(R - 1) / static_cast<double>(R))
            : kNaN;
  double regret_sum = 0.0;
  for (double g : result.regrets) regret_sum += g;
  result.mean_regret = regret_sum / static_cast<double>(R);
  result.pi_reference = pi_reference_profit(priors, N, R, seed);
  result.relative_regret = result.mean_regret / result.pi_reference;
  if (uses_cells) {
    double err = 0.0;
    for (unsigned char e : errors) err += e;
    result.error_frequency = err / static_cast<double>(R);
  }
  return result;
}

std::int64_t karm_optimal_n(const ArmPrior& prior, int k_arms, std::int64_t N,
                            std::int64_t R, std::uint64_t seed, int threads) {
  if (k_arms < 2) throw std::domain_error("karm_optimal_n: need K >= 2 arms");
  std::vector<ArmPrior> priors(static_cast<std::size_t>(k_arms), prior);
  std::int64_t n_cap = N / k_arms;
  if (n_cap < 1) throw std::domain_error("karm_optimal_n: population too small");

  auto mean_profit_at = [&](std::int64_t n) {
    PolicySpec policy{PolicySpec::Kind::test_roll,
                      std::vector<std::int64_t>(static_cast<std::size_t>(k_arms), n),
                      1,
                      ""};
    return simulate(policy, priors, N, R, seed, threads).mean_profit;
  };

  // Coarse geometric grid, then halving refinement around the best point;
  // every candidate shares the same streams so comparisons are paired.
  std::vector<std::int64_t> grid;
  grid.push_back(1);
  for (double g = 1.0; g < static_cast<double>(n_cap);) {
    g *= 1.8;
    std::int64_t n = std::min<std::int64_t>(n_cap, static_cast<std::int64_t>(g));
    if (n != grid.back()) grid.push_back(n);
  }
  std::int64_t best = grid[0];
  double best_val = mean_profit_at(best);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double val = mean_profit_at(grid[i]);
    if (val > best_val) {
      best_val = val;
      best = grid[i];
    }
  }
  std::int64_t radius = std::max<std::int64_t>(1, best);
  while (radius > 8) {
    radius = radius / 4 + 1;
    std::int64_t lo = std::max<std::int64_t>(1, best - 2 * radius);
    std::int64_t hi = std::min(n_cap, best + 2 * radius);
    for (std::int64_t n = lo; n <= hi; n += radius) {
      double val = mean_profit_at(n);
      if (val > best_val) {
        best_val = val;
        best = n;
      }
    }
  }
  for (std::int64_t n = std::max<std::int64_t>(1, best - 8);
       n <= std::min(n_cap, best + 8); ++n) {
    double val = mean_profit_at(n);
    if (val > best_val) {
      best_val = val;
      best = n;
    }
  }
  return best;
}

std::vector<PolicyRow> regret_table(const std::vector<PolicySpec>& policies,
                                    const std::vector<ArmPrior>& priors,
                                    std::int64_t N, std::int64_t R,
                                    std::uint64_t seed, int threads) {
  std::vector<PolicyRow> rows;
  rows.reserve(policies.size());
  for (const PolicySpec& policy : policies) {
    SimResult res = simulate(policy, priors, N, R, seed, threads);
    rows.push_back(PolicyRow{policy.display_label(), policy.cells,
                             res.mean_profit, res.mc_standard_error,
                             res.mean_regret, res.relative_regret,
                             res.error_frequency, res.cells_capped});
  }
  return rows;
}

void write_replicate_csv(
    std::ostream& os,
    const std::vector<std::pair<std::string, const SimResult*>>& rows) {
  std::string out = "policy,replicate,profit,regret,relative_regret\n";
  for (const auto& [label, result] : rows) {
    for (std::size_t r = 0; r < result->profits.size(); ++r) {
      out += label;
      out.push_back(',');
      out += std::to_string(r);
      out.push_back(',');
      append_double(out, result->profits[r]);
      out.push_back(',');
      append_double(out, result->regrets[r]);
      out.push_back(',');
      append_double(out, result->regrets[r] / result->pi_reference);
      out.push_back('\n');
    }
  }
  os << out;
}

void write_policy_table_csv(std::ostream& os, const std::vector<PolicyRow>& rows) {
  std::string out =
      "policy,cells,mean_profit,mc_standard_error,mean_regret,relative_regret,"
      "error_rate,capped\n";
  for (const PolicyRow& row : rows) {
    out += row.policy;
    out.push_back(',');
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (i) out.push_back(';');
      out += std::to_string(row.cells[i]);
    }
    out.push_back(',');
    append_double(out, row.mean_profit);
    out.push_back(',');
    if (std::isfinite(row.mc_standard_error))
      append_double(out, row.mc_standard_error);
    else
      out += "NA";
    out.push_back(',');
    append_double(out, row.mean_regret);
    out.push_back(',');
    append_double(out, row.relative_regret);
    out.push_back(',');
    if (row.error_frequency)
      append_double(out, *row.error_frequency);
    out.push_back(',');
    out += row.cells_capped ? "1" : "0";
    out.push_back('\n');
  }
  os << out;
}

}  // namespace testroll
