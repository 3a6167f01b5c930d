#include "scq/scdqn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <fmt/format.h>

namespace scq {

MlpShape::MlpShape(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs an input and an output layer");
  if (std::find(sizes_.begin(), sizes_.end(), 0) != sizes_.end()) {
    throw std::invalid_argument("MLP layer sizes must be positive");
  }
  offsets_.push_back(0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offsets_.back() + (sizes_[l] + 1) * sizes_[l + 1]);
  }
}

Mlp::Mlp(MlpShape s) : shape(std::move(s)), params(shape.parameter_count(), 0.0) {}

Mlp Mlp::random(MlpShape s, Rng& rng) {
  Mlp net(std::move(s));
  for (std::size_t l = 0; l < net.shape.n_layers(); ++l) {
    const std::size_t in = net.shape.layer_sizes()[l];
    const std::size_t out = net.shape.layer_sizes()[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < in * out; ++k) net.params[net.shape.weight_offset(l) + k] = dist(rng);
  }
  return net;
}

namespace {

// Post-activation outputs of every layer; acts[0] is the input.
void forward_cached(const MlpShape& shape, std::span<const double> params, std::span<const double> x,
                    std::vector<std::vector<double>>& acts) {
  if (x.size() != shape.input_size()) {
    throw std::invalid_argument(fmt::format("network input has size {}, expected {}", x.size(), shape.input_size()));
  }
  if (params.size() != shape.parameter_count()) throw std::invalid_argument("parameter vector has the wrong size");
  const auto& sizes = shape.layer_sizes();
  acts.resize(sizes.size());
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < shape.n_layers(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const double* w = params.data() + shape.weight_offset(l);
    const double* b = params.data() + shape.bias_offset(l);
    auto& y = acts[l + 1];
    y.assign(b, b + out);
    const auto& a = acts[l];
    for (std::size_t i = 0; i < in; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;  // one-hot inputs and dead rectifiers
      for (std::size_t o = 0; o < out; ++o) y[o] += w[o * in + i] * ai;
    }
    if (l + 1 < shape.n_layers()) {
      for (auto& v : y) v = std::max(v, 0.0);
    }
  }
}

std::vector<double> state_values(const MlpShape& shape, std::span<const double> params, StateId s) {
  const auto x = one_hot(shape.input_size(), s);
  return forward(shape, params, x);
}

}  // namespace

std::vector<double> forward(const MlpShape& shape, std::span<const double> params, std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  forward_cached(shape, params, x, acts);
  return std::move(acts.back());
}

std::vector<double> one_hot(std::size_t size, std::size_t index) {
  if (index >= size) throw std::out_of_range(fmt::format("one-hot index {} out of range {}", index, size));
  std::vector<double> x(size, 0.0);
  x[index] = 1.0;
  return x;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
    return;
  }
  items_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items_[uniform_index(rng, items_.size())]);
  return out;
}

std::string to_string(const TargetRule& rule) {
  struct Visitor {
    std::string operator()(const DqnRule&) const { return "dqn"; }
    std::string operator()(const DoubleDqnRule&) const { return "double_dqn"; }
    std::string operator()(const ScdqnRule& r) const { return fmt::format("scdqn_beta{}", r.beta); }
  };
  return std::visit(Visitor{}, rule);
}

TargetRule make_scdqn_rule(double beta) {
  if (!(beta >= 1.0 && std::isfinite(beta))) {
    throw std::invalid_argument(fmt::format("ScDQN beta must satisfy 1 <= beta < inf, got {}", beta));
  }
  return ScdqnRule{beta};
}

TargetRule scdqn_rule_unchecked(double beta) { return ScdqnRule{beta}; }

std::vector<double> td_targets(const TargetRule& rule, std::span<const Transition> batch, const Mlp& online,
                               const TargetParams& target, double gamma, Rng& tie_rng) {
  if (batch.empty()) throw std::invalid_argument("td_targets on an empty batch");
  if (target.params.size() != online.params.size()) {
    throw std::invalid_argument("target parameters do not match the online network");
  }
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& t : batch) {
    if (t.done) {
      out.push_back(t.r);
      continue;
    }
    const auto q_target = state_values(online.shape, target.params, t.s_next);
    double value = 0.0;
    if (std::holds_alternative<DqnRule>(rule)) {
      value = q_target[argmax_uniform_ties(q_target, tie_rng)];
    } else {
      const auto q_online = state_values(online.shape, online.params, t.s_next);
      if (std::holds_alternative<DoubleDqnRule>(rule)) {
        value = q_target[argmax_uniform_ties(q_online, tie_rng)];
      } else {
        const double beta = std::get<ScdqnRule>(rule).beta;
        const ActionId a = argmax_uniform_ties(
            q_target.size(), [&](std::size_t i) { return q_target[i] - beta * (q_target[i] - q_online[i]); },
            tie_rng);
        value = q_target[a];
      }
    }
    out.push_back(t.r + gamma * value);
  }
  return out;
}

double td_loss(const Mlp& online, std::span<const Transition> batch, std::span<const double> targets) {
  if (batch.size() != targets.size() || batch.empty()) throw std::invalid_argument("batch/target size mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = state_values(online.shape, online.params, batch[i].s)[batch[i].a] - targets[i];
    loss += d * d;
  }
  return loss / static_cast<double>(batch.size());
}

std::vector<double> grad_td_loss(const Mlp& online, std::span<const Transition> batch,
                                 std::span<const double> targets) {
  if (batch.size() != targets.size() || batch.empty()) throw std::invalid_argument("batch/target size mismatch");
  const auto& shape = online.shape;
  const auto& sizes = shape.layer_sizes();
  std::vector<double> grad(shape.parameter_count(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  const double scale = 2.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = one_hot(shape.input_size(), batch[i].s);
    forward_cached(shape, online.params, x, acts);
    const ActionId a = batch[i].a;
    if (a >= shape.output_size()) throw std::out_of_range("transition action outside the network head");
    delta.assign(shape.output_size(), 0.0);
    delta[a] = scale * (acts.back()[a] - targets[i]);

    for (std::size_t l = shape.n_layers(); l-- > 0;) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const double* w = online.params.data() + shape.weight_offset(l);
      double* gw = grad.data() + shape.weight_offset(l);
      double* gb = grad.data() + shape.bias_offset(l);
      const auto& a_in = acts[l];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        gb[o] += d;
        for (std::size_t k = 0; k < in; ++k) gw[o * in + k] += d * a_in[k];
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t k = 0; k < in; ++k) {
        if (a_in[k] <= 0.0) continue;  // rectifier derivative
        double sum = 0.0;
        for (std::size_t o = 0; o < out; ++o) sum += w[o * in + k] * delta[o];
        prev_delta[k] = sum;
      }
      delta.swap(prev_delta);
    }
  }
  return grad;
}

ScdqnState make_scdqn_state(const TabularMdp& mdp, const ScdqnConfig& cfg) {
  std::size_t n_actions = 0;
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    if (n_actions && mdp.n_actions(s) != n_actions) {
      throw std::invalid_argument("the network head needs the same action count in every state");
    }
    n_actions = mdp.n_actions(s);
  }
  std::vector<std::size_t> sizes{mdp.n_states()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(n_actions);
  Rng rng = make_rng(cfg.seed, 0);
  Mlp online = Mlp::random(MlpShape(sizes), rng);
  TargetParams target{online.params};
  return ScdqnState{std::move(online), std::move(target), ReplayBuffer(cfg.replay_capacity), std::move(rng), 0};
}

void train_step(ScdqnState& state, const ScdqnConfig& cfg, double gamma) {
  if (state.replay.size() < cfg.batch_size) {
    throw std::logic_error(fmt::format("replay holds {} transitions, batch needs {}", state.replay.size(), cfg.batch_size));
  }
  const auto batch = state.replay.sample(cfg.batch_size, state.rng);
  const auto targets = td_targets(cfg.rule, batch, state.online, state.target, gamma, state.rng);
  const auto grad = grad_td_loss(state.online, batch, targets);
  for (std::size_t k = 0; k < grad.size(); ++k) state.online.params[k] -= cfg.learning_rate * grad[k];
  ++state.updates;
  if (cfg.target_sync_period && state.updates % cfg.target_sync_period == 0) {
    state.target.params = state.online.params;
  }
}

ScdqnRun train_scdqn(const TabularMdp& mdp, const ScdqnConfig& cfg) {
  if (cfg.batch_size == 0 || cfg.train_every == 0 || cfg.log_every == 0) {
    throw std::invalid_argument("batch_size, train_every and log_every must be positive");
  }
  ScdqnRun run{make_scdqn_state(mdp, cfg), {}};
  auto& st = run.state;
  Rng& rng = st.rng;

  std::deque<double> recent_returns;
  double recent_sum = 0.0;
  double value_sum = 0.0;
  std::size_t value_count = 0;

  StateId s = mdp.start_state();
  double episode_return = 0.0;
  std::size_t episode_steps = 0;

  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    const double frac = std::min(1.0, static_cast<double>(step - 1) / static_cast<double>(std::max<std::size_t>(1, cfg.eps_decay_steps)));
    const double eps = cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start);
    const auto q = state_values(st.online.shape, st.online.params, s);
    const ActionId a = uniform01(rng) < eps ? uniform_index(rng, q.size()) : argmax_uniform_ties(q, rng);
    value_sum += q[a];
    ++value_count;

    const Transition t = sample_step(mdp, s, a, rng);
    st.replay.push(t);
    episode_return += t.r;
    ++episode_steps;
    if (t.done || episode_steps == cfg.max_episode_steps) {
      recent_returns.push_back(episode_return);
      recent_sum += episode_return;
      if (recent_returns.size() > 100) {
        recent_sum -= recent_returns.front();
        recent_returns.pop_front();
      }
      s = mdp.start_state();
      episode_return = 0.0;
      episode_steps = 0;
    } else {
      s = t.s_next;
    }

    if (st.replay.size() >= std::max(cfg.warmup_steps, cfg.batch_size) && step % cfg.train_every == 0) {
      train_step(st, cfg, mdp.gamma());
    }
    if (step % cfg.log_every == 0) {
      const double ret = recent_returns.empty() ? std::nan("") : recent_sum / static_cast<double>(recent_returns.size());
      run.log.push_back({step, ret, value_sum / static_cast<double>(value_count)});
      value_sum = 0.0;
      value_count = 0;
    }
  }
  return run;
}

std::size_t greedy_rollout_steps(const Mlp& net, const TabularMdp& mdp, std::size_t max_steps, Rng& rng) {
  StateId s = mdp.start_state();
  for (std::size_t step = 1; step <= max_steps; ++step) {
    const auto q = state_values(net.shape, net.params, s);
    const Transition t = sample_step(mdp, s, argmax_uniform_ties(q, rng), rng);
    if (t.done) return step;
    s = t.s_next;
  }
  return max_steps + 1;
}

std::string training_csv(const std::vector<TrainingLogRow>& log) {
  std::string out = "step,episode_return_mean,selected_action_value_mean\n";
  for (const auto& row : log) {
    out += fmt::format("{},{},{}\n", row.step, row.episode_return_mean, row.selected_action_value_mean);
  }
  return out;
}

}  // namespace scq
