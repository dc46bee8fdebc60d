#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "testroll/nn_asymmetric.hpp"

namespace testroll {

/// A deployment policy to benchmark by simulation.
struct PolicySpec {
  enum class Kind { test_roll, thompson, random_choice, perfect_info, ht_deploy };

  Kind kind;
  std::vector<std::int64_t> cells;  // per-arm test sizes (test_roll, ht_deploy)
  std::int64_t batch_size = 1;      // thompson posterior update cadence
  std::string label;                // row label; defaults to the kind name

  std::string display_label() const;
};

/// Latent truth for one replicate: the arm means drawn from the priors.
struct ReplicateTruth {
  std::vector<double> arm_means;
  std::int64_t replicate_index;
};

struct SimResult {
  std::vector<double> profits;  // per replicate, in replicate order
  std::vector<double> regrets;  // N * max_j m_j - profit, per replicate
  double mean_profit;
  double mc_standard_error;  // NaN when R == 1
  double mean_regret;
  double relative_regret;    // mean_regret / pi_reference
  double pi_reference;       // ex-ante perfect-information profit
  std::optional<double> error_frequency;  // test_roll / ht_deploy only
  bool cells_capped = false;
};

/// Conjugate known-variance posterior update for the chosen arm.
struct ArmPosterior {
  double mean;
  double var;
};
void thompson_step(std::vector<ArmPosterior>& posteriors, double reward,
                   std::size_t chosen_arm, double s);

/// Runs R replicates of a policy. Replicate r draws only from the stream
/// (seed, r), and results are reduced in replicate order, so the output is
/// identical for any worker-thread count. Policies evaluated with the same
/// (priors, N, R, seed) see identical latent arm means replicate by
/// replicate, pairing their comparisons.
SimResult simulate(const PolicySpec& policy, const std::vector<ArmPrior>& priors,
                   std::int64_t N, std::int64_t R, std::uint64_t seed,
                   int threads = 1);

/// Equal per-arm test size maximizing simulated mean profit for a K-arm
/// symmetric test, searched coarse-to-fine with common random numbers across
/// candidates.
std::int64_t karm_optimal_n(const ArmPrior& prior, int k_arms, std::int64_t N,
                            std::int64_t R, std::uint64_t seed, int threads = 1);

struct PolicyRow {
  std::string policy;
  std::vector<std::int64_t> cells;
  double mean_profit;
  double mc_standard_error;
  double mean_regret;
  double relative_regret;
  std::optional<double> error_frequency;
  bool cells_capped;
};

/// One summary row per policy, all simulated under common random numbers.
std::vector<PolicyRow> regret_table(const std::vector<PolicySpec>& policies,
                                    const std::vector<ArmPrior>& priors,
                                    std::int64_t N, std::int64_t R,
                                    std::uint64_t seed, int threads = 1);

/// Per-replicate draws as CSV: policy,replicate,profit,regret,relative_regret.
void write_replicate_csv(std::ostream& os,
                         const std::vector<std::pair<std::string, const SimResult*>>& rows);

/// Summary table as CSV.
void write_policy_table_csv(std::ostream& os, const std::vector<PolicyRow>& rows);

}  // namespace testroll
