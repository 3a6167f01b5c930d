#pragma once

#include <string>
#include <vector>

#include "scq/estimators.hpp"
#include "scq/experiments.hpp"
#include "scq/scdqn.hpp"

namespace scq {

/// Every preset name accepted by `scq preset`.
const std::vector<std::string>& preset_names();

/// True for presets that expand to ExperimentConfig values (all except
/// estimator-bias and scdqn-toy).
bool is_experiment_preset(const std::string& name);

/// Bundled configs for an experiment preset. fig3-* and beta-sweep expand
/// to several experiments. Throws std::invalid_argument for unknown names.
std::vector<ExperimentConfig> preset_configs(const std::string& name);

inline constexpr std::uint64_t kDefaultSeed = 2021;

struct EstimatorBiasPreset {
  std::vector<DistributionSpec> dists;
  std::vector<double> taus;
  int samples_per_set = 1;
  int n_trials = 100000;
  std::uint64_t seed = kDefaultSeed;
};

/// Eight N(-0.1, 1) variables, tau in {0.25, 0.5, 0.75}, 10^5 trials.
EstimatorBiasPreset estimator_bias_preset();

struct ScdqnToyPreset {
  double reward_lo = -2.0;
  double reward_hi = 0.0;
  double gamma = 0.95;
  std::vector<ScdqnConfig> runs;  // one per target rule
};

/// DQN, Double DQN and ScDQN (beta = 3) on the one-hot 3x3 grid world.
ScdqnToyPreset scdqn_toy_preset();

}  // namespace scq
