#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "scq/mdp.hpp"
#include "scq/random.hpp"

namespace scq {

// ---------------------------------------------------------------------------
// Schedules

struct ConstantRate {
  double alpha = 0.1;
};
/// alpha = 1 / n(s,a)
struct InverseCountRate {};
/// alpha = alpha0 * (c + 1) / (c + n(s,a))
struct ScaledHarmonicRate {
  double alpha0 = 0.1;
  std::uint64_t c = 100;
};

class LearningRateSchedule {
 public:
  using Kind = std::variant<ConstantRate, InverseCountRate, ScaledHarmonicRate>;

  static LearningRateSchedule constant(double alpha);
  static LearningRateSchedule inverse_count() { return LearningRateSchedule(InverseCountRate{}); }
  static LearningRateSchedule scaled_harmonic(double alpha0, std::uint64_t c);

  /// Step size for the n-th update of a pair (n >= 1). Always in (0, 1].
  double rate(std::uint64_t n) const;
  const Kind& kind() const { return kind_; }

 private:
  explicit LearningRateSchedule(Kind k) : kind_(k) {}
  Kind kind_;
};

struct ConstantEpsilon {
  double eps = 0.1;
};
/// eps = 1 / sqrt(n(s))
struct InverseSqrtVisits {};

class ExplorationSchedule {
 public:
  using Kind = std::variant<ConstantEpsilon, InverseSqrtVisits>;

  static ExplorationSchedule constant(double eps);
  static ExplorationSchedule inverse_sqrt_visits() { return ExplorationSchedule(InverseSqrtVisits{}); }

  /// Exploration probability given the visit count of the current state,
  /// which already includes the current visit.
  double epsilon(std::uint64_t visits) const;
  const Kind& kind() const { return kind_; }

 private:
  explicit ExplorationSchedule(Kind k) : kind_(k) {}
  Kind kind_;
};

nlohmann::json to_json(const LearningRateSchedule& lr);
LearningRateSchedule learning_rate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExplorationSchedule& eps);
ExplorationSchedule exploration_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Agent state

/// How the previous-value table of Self-correcting Q-learning is kept.
enum class PrevMode {
  /// q_prev(s,a) is the value q(s,a) held before its own latest update.
  per_entry,
  /// q_prev is the whole table one update ago (differs from q in at most
  /// one entry).
  snapshot,
};

struct QLearningTables {
  QTable q;
};

struct DoubleQTables {
  QTable qa;
  QTable qb;
  bool update_both = false;
};

struct ScqTables {
  QTable q;
  QTable q_prev;
  double beta = 2.0;
  PrevMode prev_mode = PrevMode::per_entry;
  std::optional<std::pair<StateId, ActionId>> last_update;  // snapshot mode only
};

/// Uniform-random policy; never learns. Used as the baseline for relative
/// reward metrics.
struct RandomTables {};

enum class AgentKind { qlearning, double_q, scq, random };

/// Declarative agent description; `make_agent` turns it into an AgentState.
struct AgentSpec {
  std::string name;
  AgentKind kind = AgentKind::qlearning;
  double beta = 2.0;                        // scq
  PrevMode prev_mode = PrevMode::per_entry;  // scq
  bool update_both = false;                 // double_q
  LearningRateSchedule lr = LearningRateSchedule::inverse_count();
  ExplorationSchedule explore = ExplorationSchedule::constant(0.1);

  void validate() const;
};

nlohmann::json to_json(const AgentSpec& spec);
AgentSpec agent_spec_from_json(const nlohmann::json& j);
std::string to_string(AgentKind kind);
std::string to_string(PrevMode mode);

struct AgentState {
  std::variant<QLearningTables, DoubleQTables, ScqTables, RandomTables> tables;
  std::vector<std::uint64_t> counts_sa;  // flat, see sa_index
  std::vector<std::uint64_t> counts_s;
  std::vector<std::size_t> sa_offset;    // first (s, a) slot of each state
  LearningRateSchedule lr = LearningRateSchedule::inverse_count();
  ExplorationSchedule explore = ExplorationSchedule::constant(0.1);
  double gamma = 1.0;
  std::vector<std::size_t> actions_per_state;

  AgentKind kind() const;
  std::size_t n_actions(StateId s) const { return actions_per_state[s]; }
  std::size_t sa_index(StateId s, ActionId a) const { return sa_offset[s] + a; }
  std::uint64_t count_sa(StateId s, ActionId a) const { return counts_sa[sa_index(s, a)]; }
  /// Table the agent acts on: q for Q-learning and SCQ, (qa + qb) / 2 for
  /// Double Q. Throws for the random baseline.
  QTable behavior_table() const;
  /// Entry of the behavior table without materializing it.
  double behavior_value(StateId s, ActionId a) const;
};

AgentState make_agent(const AgentSpec& spec, const TabularMdp& mdp);

// ---------------------------------------------------------------------------
// Operations

/// eps-greedy on the behavior table. Requires counts_s[s] to already
/// include the current visit.
ActionId select_action(const AgentState& agent, StateId s, Rng& rng);

void q_learning_update(AgentState& agent, const Transition& t);

void double_q_update(AgentState& agent, const Transition& t, Rng& rng);

/// Action chosen by argmax_a [q - beta*(q - q_prev)](s_next, a) and its value
/// under q.
std::pair<ActionId, double> scq_target(const AgentState& agent, StateId s_next, Rng& tie_rng);

void scq_update(AgentState& agent, const Transition& t, Rng& rng);

/// Dispatches on the agent kind.
void update(AgentState& agent, const Transition& t, Rng& rng);

struct EpisodeLog {
  std::vector<Transition> transitions;
  double total_reward = 0.0;
  std::size_t steps = 0;
  bool truncated = false;  // hit max_steps before a terminal state

  std::optional<ActionId> first_action() const {
    if (transitions.empty()) return std::nullopt;
    return transitions.front().a;
  }
};

/// Runs one episode from the start state. `log` is cleared and refilled so
/// its storage can be reused across episodes.
void run_episode(AgentState& agent, const TabularMdp& mdp, std::size_t max_steps, Rng& rng,
                 EpisodeLog& log);

EpisodeLog run_episode(AgentState& agent, const TabularMdp& mdp, std::size_t max_steps, Rng& rng);

}  // namespace scq
