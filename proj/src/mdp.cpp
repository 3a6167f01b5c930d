#include "scq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace scq {

std::span<const Successor> TabularMdp::successors(StateId s, ActionId a) const {
  if (s >= n_states()) throw std::out_of_range(fmt::format("state {} out of range", s));
  if (a >= actions_per_state_[s]) {
    throw std::out_of_range(fmt::format("action {} out of range for state {}", a, s));
  }
  return rows_[row_offset_[s] + a];
}

MdpBuilder::MdpBuilder(std::size_t n_states)
    : actions_(n_states, 1), terminal_(n_states, false), rows_(n_states) {
  if (n_states == 0) throw std::invalid_argument("an MDP needs at least one state");
  for (auto& r : rows_) r.resize(1);
}

MdpBuilder& MdpBuilder::actions(StateId s, std::size_t n) {
  if (n == 0) throw std::invalid_argument(fmt::format("state {} needs at least one action", s));
  actions_.at(s) = n;
  rows_.at(s).resize(n);
  return *this;
}

MdpBuilder& MdpBuilder::terminal(StateId s) {
  terminal_.at(s) = true;
  return *this;
}

MdpBuilder& MdpBuilder::transition(StateId s, ActionId a, StateId next, double prob,
                                   DistributionSpec reward) {
  if (next >= actions_.size()) throw std::out_of_range(fmt::format("next state {} out of range", next));
  rows_.at(s).at(a).push_back(Successor{next, prob, reward});
  return *this;
}

MdpBuilder& MdpBuilder::gamma(double g) {
  gamma_ = g;
  return *this;
}

MdpBuilder& MdpBuilder::start(StateId s) {
  start_ = s;
  return *this;
}

MdpBuilder& MdpBuilder::proper_episodic(bool flag) {
  proper_ = flag;
  return *this;
}

TabularMdp MdpBuilder::build() const {
  if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) {
    throw std::invalid_argument(fmt::format("gamma must lie in [0,1], got {}", gamma_));
  }
  if (start_ >= actions_.size()) throw std::invalid_argument("start state out of range");
  if (terminal_[start_]) throw std::invalid_argument("start state is terminal");

  TabularMdp mdp;
  mdp.actions_per_state_ = actions_;
  mdp.terminal_ = terminal_;
  mdp.gamma_ = gamma_;
  mdp.start_ = start_;
  mdp.proper_episodic_ = proper_;
  mdp.row_offset_.reserve(actions_.size());
  for (StateId s = 0; s < actions_.size(); ++s) {
    mdp.row_offset_.push_back(mdp.rows_.size());
    for (ActionId a = 0; a < actions_[s]; ++a) {
      const auto& row = rows_[s][a];
      if (terminal_[s]) {
        if (!row.empty()) {
          throw std::invalid_argument(fmt::format("terminal state {} has outgoing transitions", s));
        }
      } else {
        if (row.empty()) {
          throw std::invalid_argument(fmt::format("state {} action {} has no successors", s, a));
        }
        double total = 0.0;
        for (const auto& succ : row) {
          if (!(succ.prob >= 0.0)) {
            throw std::invalid_argument(fmt::format("negative probability at ({}, {})", s, a));
          }
          total += succ.prob;
        }
        if (std::abs(total - 1.0) > 1e-12) {
          throw std::invalid_argument(
              fmt::format("kernel row ({}, {}) sums to {}, expected 1", s, a, total));
        }
      }
      mdp.rows_.push_back(row);
    }
  }
  return mdp;
}

QTable::QTable(const std::vector<std::size_t>& actions_per_state, double init) {
  offset_.reserve(actions_per_state.size() + 1);
  offset_.push_back(0);
  for (auto n : actions_per_state) offset_.push_back(offset_.back() + n);
  values_.assign(offset_.back(), init);
}

double QTable::max(StateId s) const {
  const auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

bool QTable::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool QTable::matches(const TabularMdp& mdp) const {
  if (n_states() != mdp.n_states()) return false;
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    if (n_actions(s) != mdp.n_actions(s)) return false;
  }
  return true;
}

Transition sample_step(const TabularMdp& mdp, StateId s, ActionId a, Rng& rng) {
  if (s < mdp.n_states() && mdp.is_terminal(s)) {
    throw std::logic_error(fmt::format("cannot step from terminal state {}", s));
  }
  const auto succ = mdp.successors(s, a);
  std::size_t k = 0;
  if (succ.size() > 1) {
    const double u = uniform01(rng);
    double acc = 0.0;
    k = succ.size() - 1;
    for (std::size_t i = 0; i < succ.size(); ++i) {
      acc += succ[i].prob;
      if (u < acc) {
        k = i;
        break;
      }
    }
  }
  const Successor& next = succ[k];
  return Transition{s, a, next.reward.sample(rng), next.next, mdp.is_terminal(next.next)};
}

double expected_reward(const TabularMdp& mdp, StateId s, ActionId a) {
  double total = 0.0;
  for (const auto& succ : mdp.successors(s, a)) total += succ.prob * succ.reward.expected_value();
  return total;
}

QTable bellman_backup(const TabularMdp& mdp, const QTable& q) {
  if (!q.matches(mdp)) throw std::invalid_argument("Q table shape does not match the MDP");
  QTable out = QTable::for_mdp(mdp);
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ActionId a = 0; a < mdp.n_actions(s); ++a) {
      double v = 0.0;
      for (const auto& succ : mdp.successors(s, a)) {
        const double cont = mdp.is_terminal(succ.next) ? 0.0 : q.max(succ.next);
        v += succ.prob * (succ.reward.expected_value() + mdp.gamma() * cont);
      }
      out(s, a) = v;
    }
  }
  return out;
}

double bellman_residual(const TabularMdp& mdp, const QTable& q) {
  const QTable backed = bellman_backup(mdp, q);
  double residual = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    residual = std::max(residual, std::abs(backed.values()[i] - q.values()[i]));
  }
  return residual;
}

QTable value_iteration(const TabularMdp& mdp, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration tolerance must be positive");
  if (mdp.gamma() >= 1.0 && !mdp.proper_episodic()) {
    throw std::invalid_argument("value_iteration with gamma = 1 requires a proper episodic MDP");
  }
  QTable q = QTable::for_mdp(mdp);
  for (std::size_t it = 0; it < max_iters; ++it) {
    QTable next = bellman_backup(mdp, q);
    double diff = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      diff = std::max(diff, std::abs(next.values()[i] - q.values()[i]));
    }
    q = std::move(next);
    // T is a non-expansion, so residual(q) <= diff; check the residual itself anyway.
    if (diff <= tol && bellman_residual(mdp, q) <= tol) return q;
  }
  throw std::runtime_error(
      fmt::format("value_iteration did not reach tolerance {} within {} sweeps", tol, max_iters));
}

ActionId greedy_action(const QTable& q, StateId s, Rng& tie_rng) {
  return argmax_uniform_ties(q.row(s), tie_rng);
}

nlohmann::json to_json(const TabularMdp& mdp) {
  nlohmann::json states = nlohmann::json::array();
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    nlohmann::json actions = nlohmann::json::array();
    if (!mdp.is_terminal(s)) {
      for (ActionId a = 0; a < mdp.n_actions(s); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& succ : mdp.successors(s, a)) {
          row.push_back({{"next", succ.next}, {"prob", succ.prob}, {"reward", to_json(succ.reward)}});
        }
        actions.push_back(row);
      }
    }
    states.push_back({{"terminal", mdp.is_terminal(s)},
                      {"n_actions", mdp.n_actions(s)},
                      {"actions", actions}});
  }
  return {{"gamma", mdp.gamma()},
          {"start", mdp.start_state()},
          {"proper_episodic", mdp.proper_episodic()},
          {"states", states}};
}

TabularMdp mdp_from_json(const nlohmann::json& j) {
  const auto& states = j.at("states");
  MdpBuilder b(states.size());
  for (StateId s = 0; s < states.size(); ++s) {
    const auto& st = states[s];
    b.actions(s, st.at("n_actions").get<std::size_t>());
    if (st.at("terminal").get<bool>()) {
      b.terminal(s);
      continue;
    }
    const auto& actions = st.at("actions");
    for (ActionId a = 0; a < actions.size(); ++a) {
      for (const auto& succ : actions[a]) {
        b.transition(s, a, succ.at("next").get<StateId>(), succ.at("prob").get<double>(),
                     distribution_from_json(succ.at("reward")));
      }
    }
  }
  return b.gamma(j.at("gamma").get<double>())
      .start(j.at("start").get<StateId>())
      .proper_episodic(j.value("proper_episodic", false))
      .build();
}

}  // namespace scq
