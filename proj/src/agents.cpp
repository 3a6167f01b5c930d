#include "scq/agents.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace scq {

// ---------------------------------------------------------------------------
// Schedules

LearningRateSchedule LearningRateSchedule::constant(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument(fmt::format("constant learning rate must lie in (0,1], got {}", alpha));
  }
  return LearningRateSchedule(ConstantRate{alpha});
}

LearningRateSchedule LearningRateSchedule::scaled_harmonic(double alpha0, std::uint64_t c) {
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) {
    throw std::invalid_argument(fmt::format("alpha0 must lie in (0,1], got {}", alpha0));
  }
  if (c == 0) throw std::invalid_argument("scaled harmonic schedule needs c >= 1");
  return LearningRateSchedule(ScaledHarmonicRate{alpha0, c});
}

double LearningRateSchedule::rate(std::uint64_t n) const {
  if (n == 0) throw std::logic_error("learning rate queried with a zero update count");
  struct Visitor {
    std::uint64_t n;
    double operator()(const ConstantRate& r) const { return r.alpha; }
    double operator()(const InverseCountRate&) const { return 1.0 / static_cast<double>(n); }
    double operator()(const ScaledHarmonicRate& r) const {
      return r.alpha0 * static_cast<double>(r.c + 1) / static_cast<double>(r.c + n);
    }
  };
  return std::visit(Visitor{n}, kind_);
}

ExplorationSchedule ExplorationSchedule::constant(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::invalid_argument(fmt::format("epsilon must lie in [0,1], got {}", eps));
  }
  return ExplorationSchedule(ConstantEpsilon{eps});
}

double ExplorationSchedule::epsilon(std::uint64_t visits) const {
  if (const auto* c = std::get_if<ConstantEpsilon>(&kind_)) return c->eps;
  if (visits == 0) throw std::logic_error("1/sqrt(n(s)) exploration queried before the first visit");
  return 1.0 / std::sqrt(static_cast<double>(visits));
}

nlohmann::json to_json(const LearningRateSchedule& lr) {
  struct Visitor {
    nlohmann::json operator()(const ConstantRate& r) const {
      return {{"kind", "constant"}, {"alpha", r.alpha}};
    }
    nlohmann::json operator()(const InverseCountRate&) const { return {{"kind", "inverse_count"}}; }
    nlohmann::json operator()(const ScaledHarmonicRate& r) const {
      return {{"kind", "scaled_harmonic"}, {"alpha0", r.alpha0}, {"c", r.c}};
    }
  };
  return std::visit(Visitor{}, lr.kind());
}

LearningRateSchedule learning_rate_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return LearningRateSchedule::constant(j.at("alpha").get<double>());
  if (kind == "inverse_count") return LearningRateSchedule::inverse_count();
  if (kind == "scaled_harmonic") {
    return LearningRateSchedule::scaled_harmonic(j.at("alpha0").get<double>(),
                                                 j.at("c").get<std::uint64_t>());
  }
  throw std::invalid_argument("unknown learning-rate schedule '" + kind + "'");
}

nlohmann::json to_json(const ExplorationSchedule& eps) {
  if (const auto* c = std::get_if<ConstantEpsilon>(&eps.kind())) {
    return {{"kind", "constant"}, {"eps", c->eps}};
  }
  return {{"kind", "inverse_sqrt_visits"}};
}

ExplorationSchedule exploration_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return ExplorationSchedule::constant(j.at("eps").get<double>());
  if (kind == "inverse_sqrt_visits") return ExplorationSchedule::inverse_sqrt_visits();
  throw std::invalid_argument("unknown exploration schedule '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Specs

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::qlearning: return "qlearning";
    case AgentKind::double_q: return "double_q";
    case AgentKind::scq: return "scq";
    case AgentKind::random: return "random";
  }
  return "?";
}

std::string to_string(PrevMode mode) {
  return mode == PrevMode::per_entry ? "per_entry" : "snapshot";
}

void AgentSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("agent name must not be empty");
  if (kind == AgentKind::scq && !(beta >= 1.0 && std::isfinite(beta))) {
    throw std::invalid_argument(fmt::format("agent '{}': beta must satisfy 1 <= beta < inf, got {}", name, beta));
  }
}

nlohmann::json to_json(const AgentSpec& spec) {
  nlohmann::json j = {{"name", spec.name}, {"kind", to_string(spec.kind)}};
  if (spec.kind == AgentKind::random) return j;
  j["lr"] = to_json(spec.lr);
  j["explore"] = to_json(spec.explore);
  if (spec.kind == AgentKind::scq) {
    j["beta"] = spec.beta;
    j["prev_mode"] = to_string(spec.prev_mode);
  }
  if (spec.kind == AgentKind::double_q) j["update_both"] = spec.update_both;
  return j;
}

AgentSpec agent_spec_from_json(const nlohmann::json& j) {
  AgentSpec spec;
  spec.name = j.at("name").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "qlearning") {
    spec.kind = AgentKind::qlearning;
  } else if (kind == "double_q") {
    spec.kind = AgentKind::double_q;
  } else if (kind == "scq") {
    spec.kind = AgentKind::scq;
  } else if (kind == "random") {
    spec.kind = AgentKind::random;
  } else {
    throw std::invalid_argument("unknown agent kind '" + kind + "'");
  }
  if (spec.kind != AgentKind::random) {
    spec.lr = learning_rate_from_json(j.at("lr"));
    spec.explore = exploration_from_json(j.at("explore"));
  }
  if (spec.kind == AgentKind::scq) {
    spec.beta = j.at("beta").get<double>();
    const auto mode = j.value("prev_mode", std::string("per_entry"));
    if (mode == "per_entry") {
      spec.prev_mode = PrevMode::per_entry;
    } else if (mode == "snapshot") {
      spec.prev_mode = PrevMode::snapshot;
    } else {
      throw std::invalid_argument("unknown prev_mode '" + mode + "'");
    }
  }
  if (spec.kind == AgentKind::double_q) spec.update_both = j.value("update_both", false);
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Agent state

AgentKind AgentState::kind() const {
  switch (tables.index()) {
    case 0: return AgentKind::qlearning;
    case 1: return AgentKind::double_q;
    case 2: return AgentKind::scq;
    default: return AgentKind::random;
  }
}

QTable AgentState::behavior_table() const {
  if (const auto* t = std::get_if<QLearningTables>(&tables)) return t->q;
  if (const auto* t = std::get_if<ScqTables>(&tables)) return t->q;
  if (const auto* t = std::get_if<DoubleQTables>(&tables)) {
    QTable avg = t->qa;
    for (std::size_t i = 0; i < avg.size(); ++i) {
      avg.values()[i] = 0.5 * (t->qa.values()[i] + t->qb.values()[i]);
    }
    return avg;
  }
  throw std::logic_error("the random baseline has no value table");
}

double AgentState::behavior_value(StateId s, ActionId a) const {
  if (const auto* t = std::get_if<QLearningTables>(&tables)) return t->q(s, a);
  if (const auto* t = std::get_if<ScqTables>(&tables)) return t->q(s, a);
  if (const auto* t = std::get_if<DoubleQTables>(&tables)) return 0.5 * (t->qa(s, a) + t->qb(s, a));
  throw std::logic_error("the random baseline has no value table");
}

AgentState make_agent(const AgentSpec& spec, const TabularMdp& mdp) {
  spec.validate();
  AgentState agent;
  const QTable zero = QTable::for_mdp(mdp);
  switch (spec.kind) {
    case AgentKind::qlearning:
      agent.tables = QLearningTables{zero};
      break;
    case AgentKind::double_q:
      agent.tables = DoubleQTables{zero, zero, spec.update_both};
      break;
    case AgentKind::scq:
      agent.tables = ScqTables{zero, zero, spec.beta, spec.prev_mode, std::nullopt};
      break;
    case AgentKind::random:
      agent.tables = RandomTables{};
      break;
  }
  agent.actions_per_state = mdp.actions_per_state();
  agent.sa_offset.reserve(mdp.n_states());
  std::size_t total = 0;
  for (auto n : agent.actions_per_state) {
    agent.sa_offset.push_back(total);
    total += n;
  }
  agent.counts_sa.assign(total, 0);
  agent.counts_s.assign(mdp.n_states(), 0);
  agent.lr = spec.lr;
  agent.explore = spec.explore;
  agent.gamma = mdp.gamma();
  return agent;
}

// ---------------------------------------------------------------------------
// Operations

ActionId select_action(const AgentState& agent, StateId s, Rng& rng) {
  const std::size_t n = agent.n_actions(s);
  if (std::holds_alternative<RandomTables>(agent.tables)) return uniform_index(rng, n);
  const double eps = agent.explore.epsilon(agent.counts_s[s]);
  if (uniform01(rng) < eps) return uniform_index(rng, n);
  if (const auto* t = std::get_if<DoubleQTables>(&agent.tables)) {
    return argmax_uniform_ties(n, [&](std::size_t a) { return t->qa(s, a) + t->qb(s, a); }, rng);
  }
  const QTable& q = std::holds_alternative<ScqTables>(agent.tables)
                        ? std::get<ScqTables>(agent.tables).q
                        : std::get<QLearningTables>(agent.tables).q;
  return greedy_action(q, s, rng);
}

namespace {

double next_step_rate(AgentState& agent, StateId s, ActionId a) {
  return agent.lr.rate(++agent.counts_sa[agent.sa_index(s, a)]);
}

template <class T>
T& tables_as(AgentState& agent, const char* op) {
  auto* t = std::get_if<T>(&agent.tables);
  if (!t) throw std::logic_error(fmt::format("{} applied to a {} agent", op, to_string(agent.kind())));
  return *t;
}

// One decoupled update of `learner` toward r + gamma * evaluator(s', argmax learner(s')).
void double_half_update(QTable& learner, const QTable& evaluator, const Transition& t,
                        double alpha, double gamma, Rng& rng) {
  double target = t.r;
  if (!t.done) target += gamma * evaluator(t.s_next, greedy_action(learner, t.s_next, rng));
  learner(t.s, t.a) += alpha * (target - learner(t.s, t.a));
}

}  // namespace

void q_learning_update(AgentState& agent, const Transition& t) {
  auto& tables = tables_as<QLearningTables>(agent, "q_learning_update");
  const double alpha = next_step_rate(agent, t.s, t.a);
  const double cont = t.done ? 0.0 : tables.q.max(t.s_next);
  double& q = tables.q(t.s, t.a);
  q += alpha * (t.r + agent.gamma * cont - q);
}

void double_q_update(AgentState& agent, const Transition& t, Rng& rng) {
  auto& tables = tables_as<DoubleQTables>(agent, "double_q_update");
  const double alpha = next_step_rate(agent, t.s, t.a);
  if (tables.update_both) {
    double_half_update(tables.qa, tables.qb, t, alpha, agent.gamma, rng);
    double_half_update(tables.qb, tables.qa, t, alpha, agent.gamma, rng);
  } else if (uniform01(rng) < 0.5) {
    double_half_update(tables.qa, tables.qb, t, alpha, agent.gamma, rng);
  } else {
    double_half_update(tables.qb, tables.qa, t, alpha, agent.gamma, rng);
  }
}

std::pair<ActionId, double> scq_target(const AgentState& agent, StateId s_next, Rng& tie_rng) {
  const auto* tables = std::get_if<ScqTables>(&agent.tables);
  if (!tables) throw std::logic_error("scq_target applied to a non-SCQ agent");
  const QTable& q = tables->q;
  const QTable& prev = tables->q_prev;
  const double beta = tables->beta;
  const ActionId best = argmax_uniform_ties(
      q.n_actions(s_next),
      [&](std::size_t a) { return q(s_next, a) - beta * (q(s_next, a) - prev(s_next, a)); },
      tie_rng);
  return {best, q(s_next, best)};
}

void scq_update(AgentState& agent, const Transition& t, Rng& rng) {
  auto& tables = tables_as<ScqTables>(agent, "scq_update");
  double target = t.r;
  if (!t.done) target += agent.gamma * scq_target(agent, t.s_next, rng).second;

  if (tables.prev_mode == PrevMode::snapshot && tables.last_update) {
    const auto [ls, la] = *tables.last_update;
    tables.q_prev(ls, la) = tables.q(ls, la);
  }
  tables.q_prev(t.s, t.a) = tables.q(t.s, t.a);
  tables.last_update = {t.s, t.a};

  const double alpha = next_step_rate(agent, t.s, t.a);
  double& q = tables.q(t.s, t.a);
  q += alpha * (target - q);
}

void update(AgentState& agent, const Transition& t, Rng& rng) {
  switch (agent.kind()) {
    case AgentKind::qlearning: q_learning_update(agent, t); break;
    case AgentKind::double_q: double_q_update(agent, t, rng); break;
    case AgentKind::scq: scq_update(agent, t, rng); break;
    case AgentKind::random: ++agent.counts_sa[agent.sa_index(t.s, t.a)]; break;
  }
}

void run_episode(AgentState& agent, const TabularMdp& mdp, std::size_t max_steps, Rng& rng,
                 EpisodeLog& log) {
  log.transitions.clear();
  log.total_reward = 0.0;
  log.steps = 0;
  log.truncated = false;
  StateId s = mdp.start_state();
  while (!mdp.is_terminal(s)) {
    if (log.steps == max_steps) {
      log.truncated = true;
      break;
    }
    ++agent.counts_s[s];
    const ActionId a = select_action(agent, s, rng);
    const Transition t = sample_step(mdp, s, a, rng);
    update(agent, t, rng);
    log.transitions.push_back(t);
    log.total_reward += t.r;
    ++log.steps;
    s = t.s_next;
  }
}

EpisodeLog run_episode(AgentState& agent, const TabularMdp& mdp, std::size_t max_steps, Rng& rng) {
  EpisodeLog log;
  run_episode(agent, mdp, max_steps, rng, log);
  return log;
}

}  // namespace scq
