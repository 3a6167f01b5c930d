#pragma once

// Small function-approximation version of the self-correcting target:
// a rectifier MLP over one-hot states, a replay buffer, a delayed target
// parameter copy, and the DQN / Double DQN / self-correcting target rules.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scq/mdp.hpp"
#include "scq/random.hpp"

namespace scq {

/// Layer sizes input, hidden..., output. Parameters are stored flat, layer
/// by layer: row-major weights (out x in) followed by the bias (out).
class MlpShape {
 public:
  explicit MlpShape(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t n_layers() const { return sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return offsets_.back(); }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  friend bool operator==(const MlpShape&, const MlpShape&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

struct Mlp {
  MlpShape shape;
  std::vector<double> params;

  /// Zero parameters.
  explicit Mlp(MlpShape s);
  /// He-style uniform initialization for the weights, zero biases.
  static Mlp random(MlpShape s, Rng& rng);
};

/// Delayed copy of an online network's parameters.
struct TargetParams {
  std::vector<double> params;
};

/// Rectifier hidden layers, linear head. Throws on input size mismatch.
std::vector<double> forward(const MlpShape& shape, std::span<const double> params,
                            std::span<const double> x);

std::vector<double> one_hot(std::size_t size, std::size_t index);

/// Fixed-capacity FIFO ring of transitions with uniform sampling (with
/// replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // oldest item once the ring is full
};

struct DqnRule {};
struct DoubleDqnRule {};
struct ScdqnRule {
  double beta = 3.0;
};
using TargetRule = std::variant<DqnRule, DoubleDqnRule, ScdqnRule>;

std::string to_string(const TargetRule& rule);

/// ScDQN with beta >= 1; beta in [0, 1) is reachable only through
/// `scdqn_rule_unchecked`, which exists for the reduction identities.
TargetRule make_scdqn_rule(double beta);
TargetRule scdqn_rule_unchecked(double beta);

/// Per-transition TD targets. States are one-hot encoded with the network's
/// input size. Done transitions use r alone.
std::vector<double> td_targets(const TargetRule& rule, std::span<const Transition> batch,
                               const Mlp& online, const TargetParams& target, double gamma,
                               Rng& tie_rng);

/// Gradient of mean_i (Q(s_i, a_i; theta) - target_i)^2 with the targets held
/// constant.
std::vector<double> grad_td_loss(const Mlp& online, std::span<const Transition> batch,
                                 std::span<const double> targets);

double td_loss(const Mlp& online, std::span<const Transition> batch, std::span<const double> targets);

struct ScdqnConfig {
  TargetRule rule = ScdqnRule{3.0};
  std::vector<std::size_t> hidden = {64};
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 10000;
  std::size_t warmup_steps = 500;
  std::size_t train_every = 1;
  std::size_t target_sync_period = 500;
  double eps_start = 1.0;
  double eps_end = 0.1;
  std::size_t eps_decay_steps = 20000;
  std::size_t max_episode_steps = 200;
  std::size_t total_steps = 200000;
  std::size_t log_every = 1000;
  std::uint64_t seed = 0;
};

struct ScdqnState {
  Mlp online;
  TargetParams target;
  ReplayBuffer replay;
  Rng rng;
  std::size_t updates = 0;
};

ScdqnState make_scdqn_state(const TabularMdp& mdp, const ScdqnConfig& cfg);

/// One gradient step on a replay minibatch; syncs the target copy every
/// target_sync_period updates. Throws if the replay holds fewer than
/// batch_size transitions.
void train_step(ScdqnState& state, const ScdqnConfig& cfg, double gamma);

struct TrainingLogRow {
  std::size_t step = 0;
  double episode_return_mean = 0.0;        // over the last 100 finished episodes
  double selected_action_value_mean = 0.0;  // Q(s, a_selected; theta) over the interval
};

struct ScdqnRun {
  ScdqnState state;
  std::vector<TrainingLogRow> log;
};

/// eps-greedy interaction with `mdp`, one transition into replay per step,
/// training every `train_every` steps after warmup.
ScdqnRun train_scdqn(const TabularMdp& mdp, const ScdqnConfig& cfg);

/// Greedy rollout from the start state; returns the number of steps taken
/// to terminate, or max_steps + 1 if the episode did not terminate.
std::size_t greedy_rollout_steps(const Mlp& net, const TabularMdp& mdp, std::size_t max_steps, Rng& rng);

/// `step,episode_return_mean,selected_action_value_mean`
std::string training_csv(const std::vector<TrainingLogRow>& log);

}  // namespace scq
