#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "scq/agents.hpp"
#include "scq/mdp.hpp"

namespace scq {

inline constexpr int kConfigSchemaVersion = 1;

/// Schema or parameter problem in an experiment description.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BiasExampleEnv {
  std::size_t k_b_actions = 8;
};

struct GridWorldEnv {
  std::size_t n = 3;
  double reward_lo = -12.0;
  double reward_hi = 10.0;
  double gamma = 0.95;
};

struct CliffWalkEnv {
  std::size_t height = 5;
  std::size_t width = 10;
};

using EnvSpec = std::variant<BiasExampleEnv, GridWorldEnv, CliffWalkEnv>;

TabularMdp build_env(const EnvSpec& env);
nlohmann::json to_json(const EnvSpec& env);
EnvSpec env_from_json(const nlohmann::json& j);

enum class Metric {
  percent_left,           // bias example only: 100 if the episode opened with left
  avg_reward_per_step,    // trailing window of `reward_window` steps
  start_state_bias,       // max_a Q(start, a) - max_a Q*(start, a)
  episode_reward,         // total reward of the episode
  relative_total_reward,  // episode_reward minus that of the random baseline agent
};

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

struct ExperimentConfig {
  std::string name = "experiment";
  EnvSpec env = BiasExampleEnv{};
  std::vector<AgentSpec> agents;
  std::size_t n_runs = 1;
  std::size_t n_episodes = 1;
  std::size_t max_steps_per_episode = 10000;
  std::uint64_t master_seed = 0;
  std::vector<Metric> metrics;
  std::size_t smoothing_window = 0;
  std::size_t reward_window = 500;
  std::size_t threads = 0;  // 0 = available parallelism

  /// Throws ConfigError on invalid parameters or metric/env mismatches.
  void validate() const;
};

/// `include_threads = false` drops the thread count, which never affects
/// results; summary.json uses that form so outputs stay thread-invariant.
nlohmann::json to_json(const ExperimentConfig& cfg, bool include_threads = true);
ExperimentConfig config_from_json(const nlohmann::json& j);

struct SeriesPoint {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double sem = 0.0;
};

struct AgentResult {
  std::string name;
  std::map<Metric, std::vector<SeriesPoint>> series;  // one point per episode
  std::map<std::string, double> summary;
  std::uint64_t truncated_episodes = 0;

  const std::vector<SeriesPoint>& at(Metric m) const;
};

struct AggregateResult {
  ExperimentConfig config;
  std::vector<AgentResult> agents;

  const AgentResult& agent(const std::string& name) const;
};

/// Runs every (run, agent) pair with its own random stream derived from
/// (master_seed, run, agent index) and folds per-run series in run order.
/// The result does not depend on the thread count.
AggregateResult run_experiment(const ExperimentConfig& cfg);

/// Writes `<out_root>/<name>/<agent>/<metric>.csv` (header
/// `episode,mean,min,max,sem`), `<metric>_smoothed.csv` when a smoothing
/// window is set, and `<out_root>/<name>/summary.json`.
void write_result(const AggregateResult& result, const std::filesystem::path& out_root);

// ---------------------------------------------------------------------------
// Metric building blocks (also used by the runner)

/// Sum of the most recent `window` step rewards, spanning episode
/// boundaries.
class TrailingRewardWindow {
 public:
  explicit TrailingRewardWindow(std::size_t window);
  void push(double reward);
  /// Average over the available steps (fewer than `window` early on).
  double average() const;
  bool full() const { return filled_ == window_; }

 private:
  std::size_t window_;
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
  double sum_ = 0.0;
};

/// `runs[r][e]` is episode e of run r. Returns, per episode, the percentage
/// of runs whose first action from A was left.
std::vector<double> metric_percent_left(const std::vector<std::vector<EpisodeLog>>& runs);

struct WindowedSeries {
  std::vector<double> values;  // one per episode boundary
  std::vector<bool> partial;   // fewer than `window` steps were available
};

WindowedSeries metric_avg_reward_per_step(std::span<const EpisodeLog> episodes, std::size_t window);

double metric_start_state_bias(const QTable& q, const QTable& q_star, StateId start);

/// Final-episode total reward of the agent minus that of the baseline.
double metric_relative_total_reward(std::span<const double> agent_series,
                                    std::span<const double> baseline_series);

/// Centered moving average; windows shrink at the edges. window 0 or 1 is
/// the identity.
std::vector<double> smooth(std::span<const double> series, std::size_t window);

}  // namespace scq
