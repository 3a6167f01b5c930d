#include "scq/presets.hpp"

#include <algorithm>
#include <stdexcept>

namespace scq {
namespace {

constexpr bool kGridDoubleQUpdateBoth = false;

AgentSpec make_spec(std::string name, AgentKind kind, LearningRateSchedule lr, ExplorationSchedule explore,
                    double beta = 2.0, bool update_both = false) {
  AgentSpec spec;
  spec.name = std::move(name);
  spec.kind = kind;
  spec.lr = lr;
  spec.explore = explore;
  spec.beta = beta;
  spec.update_both = update_both;
  return spec;
}

// Q-learning, Double Q-learning and SCQ with beta = 1, 2, 4.
std::vector<AgentSpec> standard_agents(LearningRateSchedule lr, ExplorationSchedule explore, bool update_both) {
  return {
      make_spec("q_learning", AgentKind::qlearning, lr, explore),
      make_spec("double_q", AgentKind::double_q, lr, explore, 2.0, update_both),
      make_spec("scq_beta1", AgentKind::scq, lr, explore, 1.0),
      make_spec("scq_beta2", AgentKind::scq, lr, explore, 2.0),
      make_spec("scq_beta4", AgentKind::scq, lr, explore, 4.0),
  };
}

AgentSpec random_baseline() {
  AgentSpec spec;
  spec.name = "random";
  spec.kind = AgentKind::random;
  return spec;
}

ExperimentConfig fig1() {
  ExperimentConfig cfg;
  cfg.name = "fig1";
  cfg.env = BiasExampleEnv{8};
  cfg.agents = standard_agents(LearningRateSchedule::constant(0.1), ExplorationSchedule::constant(0.1), false);
  cfg.n_runs = 10000;
  cfg.n_episodes = 300;
  cfg.master_seed = kDefaultSeed;
  cfg.metrics = {Metric::percent_left};
  return cfg;
}

ExperimentConfig fig2(const std::string& suffix, double lo, double hi) {
  ExperimentConfig cfg;
  cfg.name = "fig2-" + suffix;
  cfg.env = GridWorldEnv{3, lo, hi, 0.95};
  cfg.agents = standard_agents(LearningRateSchedule::inverse_count(), ExplorationSchedule::inverse_sqrt_visits(),
                               kGridDoubleQUpdateBoth);
  cfg.n_runs = 500;
  cfg.n_episodes = 10000;
  cfg.max_steps_per_episode = 10000;
  cfg.master_seed = kDefaultSeed;
  cfg.metrics = {Metric::avg_reward_per_step, Metric::start_state_bias};
  cfg.reward_window = 500;
  return cfg;
}

ExperimentConfig fig3(std::size_t width, bool annealed) {
  ExperimentConfig cfg;
  cfg.name = "fig3-" + std::to_string(width) + (annealed ? "-annealed" : "-fixed");
  cfg.env = CliffWalkEnv{5, width};
  const auto explore = annealed ? ExplorationSchedule::inverse_sqrt_visits() : ExplorationSchedule::constant(0.1);
  cfg.agents = standard_agents(LearningRateSchedule::scaled_harmonic(0.1, 100), explore, false);
  cfg.agents.push_back(random_baseline());
  cfg.n_runs = 500;
  cfg.n_episodes = 500;
  cfg.max_steps_per_episode = 10000;
  cfg.master_seed = kDefaultSeed;
  cfg.metrics = {Metric::episode_reward, Metric::relative_total_reward};
  cfg.smoothing_window = 20;
  return cfg;
}

std::vector<AgentSpec> beta_sweep_agents(LearningRateSchedule lr, ExplorationSchedule explore) {
  std::vector<AgentSpec> agents;
  for (int beta = 1; beta <= 4; ++beta) {
    agents.push_back(make_spec("scq_beta" + std::to_string(beta), AgentKind::scq, lr, explore, beta));
  }
  return agents;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig1",   "fig2-high", "fig2-med",   "fig2-low",       "fig3-10",
                                                 "fig3-20", "beta-sweep", "estimator-bias", "scdqn-toy"};
  return names;
}

bool is_experiment_preset(const std::string& name) {
  return name != "estimator-bias" && name != "scdqn-toy" &&
         std::find(preset_names().begin(), preset_names().end(), name) != preset_names().end();
}

std::vector<ExperimentConfig> preset_configs(const std::string& name) {
  if (name == "fig1") return {fig1()};
  if (name == "fig2-high") return {fig2("high", -12.0, 10.0)};
  if (name == "fig2-med") return {fig2("med", -6.0, 4.0)};
  if (name == "fig2-low") return {fig2("low", -2.0, 0.0)};
  if (name == "fig3-10") return {fig3(10, true), fig3(10, false)};
  if (name == "fig3-20") return {fig3(20, true), fig3(20, false)};
  if (name == "beta-sweep") {
    ExperimentConfig grid = fig2("med", -6.0, 4.0);
    grid.name = "beta-sweep-grid";
    grid.agents = beta_sweep_agents(LearningRateSchedule::inverse_count(), ExplorationSchedule::inverse_sqrt_visits());
    ExperimentConfig cliff = fig3(10, true);
    cliff.name = "beta-sweep-cliff";
    cliff.agents = beta_sweep_agents(LearningRateSchedule::scaled_harmonic(0.1, 100),
                                     ExplorationSchedule::inverse_sqrt_visits());
    cliff.agents.push_back(random_baseline());
    return {grid, cliff};
  }
  throw std::invalid_argument("unknown experiment preset '" + name + "'");
}

EstimatorBiasPreset estimator_bias_preset() {
  EstimatorBiasPreset p;
  p.dists.assign(8, DistributionSpec::gaussian(-0.1, 1.0));
  p.taus = {0.25, 0.5, 0.75};
  return p;
}

ScdqnToyPreset scdqn_toy_preset() {
  ScdqnToyPreset p;
  for (const TargetRule& rule : {TargetRule{DqnRule{}}, TargetRule{DoubleDqnRule{}}, make_scdqn_rule(3.0)}) {
    ScdqnConfig cfg;
    cfg.rule = rule;
    cfg.seed = kDefaultSeed;
    p.runs.push_back(cfg);
  }
  return p;
}

}  // namespace scq
