#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "scq/distribution.hpp"
#include "scq/random.hpp"

namespace scq {

using StateId = std::size_t;
using ActionId = std::size_t;

/// One entry of a kernel row: next state, its probability, and the reward
/// law attached to the (s, a, s') triple.
struct Successor {
  StateId next = 0;
  double prob = 1.0;
  DistributionSpec reward;
};

struct Transition {
  StateId s = 0;
  ActionId a = 0;
  double r = 0.0;
  StateId s_next = 0;
  bool done = false;
};

/// Finite MDP with per-(s,a) sparse successor lists. Terminal states keep a
/// nominal action count (so Q tables stay rectangular per state) but have
/// no kernel rows; stepping out of them is an error.
class TabularMdp {
 public:
  std::size_t n_states() const { return actions_per_state_.size(); }
  std::size_t n_actions(StateId s) const { return actions_per_state_.at(s); }
  const std::vector<std::size_t>& actions_per_state() const { return actions_per_state_; }
  std::span<const Successor> successors(StateId s, ActionId a) const;
  bool is_terminal(StateId s) const { return terminal_.at(s); }
  double gamma() const { return gamma_; }
  StateId start_state() const { return start_; }
  /// Set by the bundled builders whose structure guarantees termination;
  /// only such MDPs may use gamma = 1 with the value-iteration oracle.
  bool proper_episodic() const { return proper_episodic_; }

 private:
  friend class MdpBuilder;
  TabularMdp() = default;

  std::vector<std::size_t> actions_per_state_;
  std::vector<std::size_t> row_offset_;              // first (s,a) row of state s
  std::vector<std::vector<Successor>> rows_;          // indexed by row_offset_[s] + a
  std::vector<bool> terminal_;
  double gamma_ = 1.0;
  StateId start_ = 0;
  bool proper_episodic_ = false;
};

class MdpBuilder {
 public:
  explicit MdpBuilder(std::size_t n_states);

  MdpBuilder& actions(StateId s, std::size_t n);
  MdpBuilder& terminal(StateId s);
  MdpBuilder& transition(StateId s, ActionId a, StateId next, double prob, DistributionSpec reward);
  MdpBuilder& gamma(double g);
  MdpBuilder& start(StateId s);
  MdpBuilder& proper_episodic(bool flag = true);

  /// Validates kernel rows (non-negative, sum to 1 within 1e-12) and the
  /// terminal set, then freezes the model.
  TabularMdp build() const;

 private:
  std::vector<std::size_t> actions_;
  std::vector<bool> terminal_;
  std::vector<std::vector<std::vector<Successor>>> rows_;  // [s][a]
  double gamma_ = 1.0;
  StateId start_ = 0;
  bool proper_ = false;
};

/// Dense real[state][action] table stored flat.
class QTable {
 public:
  QTable() = default;
  explicit QTable(const std::vector<std::size_t>& actions_per_state, double init = 0.0);
  static QTable for_mdp(const TabularMdp& mdp, double init = 0.0) {
    return QTable(mdp.actions_per_state(), init);
  }

  std::size_t n_states() const { return offset_.empty() ? 0 : offset_.size() - 1; }
  std::size_t n_actions(StateId s) const { return offset_[s + 1] - offset_[s]; }
  std::size_t index(StateId s, ActionId a) const { return offset_[s] + a; }
  std::size_t size() const { return values_.size(); }

  double operator()(StateId s, ActionId a) const { return values_[offset_[s] + a]; }
  double& operator()(StateId s, ActionId a) { return values_[offset_[s] + a]; }
  std::span<const double> row(StateId s) const {
    return {values_.data() + offset_[s], n_actions(s)};
  }
  std::span<double> row(StateId s) { return {values_.data() + offset_[s], n_actions(s)}; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max(StateId s) const;
  bool all_finite() const;
  bool same_shape(const QTable& other) const { return offset_ == other.offset_; }
  bool matches(const TabularMdp& mdp) const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::vector<std::size_t> offset_;
  std::vector<double> values_;
};

Transition sample_step(const TabularMdp& mdp, StateId s, ActionId a, Rng& rng);

/// Sum over successors of prob * mean reward.
double expected_reward(const TabularMdp& mdp, StateId s, ActionId a);

/// One synchronous Bellman optimality backup. Terminal rows stay zero and
/// contribute zero continuation.
QTable bellman_backup(const TabularMdp& mdp, const QTable& q);

/// Max-norm distance between q and its Bellman backup.
double bellman_residual(const TabularMdp& mdp, const QTable& q);

/// Iterates backups from Q = 0 until the returned table has residual
/// <= tol. Throws std::runtime_error if max_iters sweeps do not suffice,
/// and std::invalid_argument for gamma = 1 on an MDP not marked proper.
QTable value_iteration(const TabularMdp& mdp, double tol, std::size_t max_iters);

ActionId greedy_action(const QTable& q, StateId s, Rng& tie_rng);

/// Debug serialization; the layout is not a stable format.
nlohmann::json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

}  // namespace scq
