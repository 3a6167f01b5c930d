#include <gtest/gtest.h>

#include <cmath>

#include "scq/agents.hpp"
#include "scq/envs.hpp"

using namespace scq;

namespace {

AgentSpec spec(AgentKind kind, double alpha = 0.5) {
  AgentSpec s;
  s.name = to_string(kind);
  s.kind = kind;
  s.lr = LearningRateSchedule::constant(alpha);
  s.explore = ExplorationSchedule::constant(0.1);
  return s;
}

AgentSpec scq_spec(double beta, double alpha = 0.5) {
  auto s = spec(AgentKind::scq, alpha);
  s.beta = beta;
  return s;
}

ScqTables& scq_tables(AgentState& a) { return std::get<ScqTables>(a.tables); }

constexpr StateId A = BiasExample::kA;
constexpr StateId B = BiasExample::kB;

}  // namespace

TEST(Schedules, LearningRates) {
  EXPECT_EQ(LearningRateSchedule::constant(0.1).rate(7), 0.1);
  EXPECT_EQ(LearningRateSchedule::inverse_count().rate(1), 1.0);
  EXPECT_EQ(LearningRateSchedule::inverse_count().rate(4), 0.25);
  const auto h = LearningRateSchedule::scaled_harmonic(0.1, 100);
  EXPECT_DOUBLE_EQ(h.rate(1), 0.1);
  EXPECT_DOUBLE_EQ(h.rate(101), 0.1 * 101.0 / 201.0);
  EXPECT_THROW(LearningRateSchedule::inverse_count().rate(0), std::logic_error);
  EXPECT_THROW(LearningRateSchedule::constant(0.0), std::invalid_argument);
  EXPECT_THROW(LearningRateSchedule::constant(1.5), std::invalid_argument);
}

TEST(Schedules, Exploration) {
  const auto e = ExplorationSchedule::inverse_sqrt_visits();
  EXPECT_EQ(e.epsilon(1), 1.0);
  EXPECT_DOUBLE_EQ(e.epsilon(4), 0.5);
  EXPECT_EQ(ExplorationSchedule::constant(0.1).epsilon(1000), 0.1);
  EXPECT_THROW(e.epsilon(0), std::logic_error);
  EXPECT_THROW(ExplorationSchedule::constant(1.2), std::invalid_argument);
}

TEST(Schedules, JsonRoundTrip) {
  for (const auto& lr : {LearningRateSchedule::constant(0.2), LearningRateSchedule::inverse_count(),
                         LearningRateSchedule::scaled_harmonic(0.1, 50)})
    EXPECT_EQ(to_json(learning_rate_from_json(to_json(lr))), to_json(lr));
  for (const auto& ex : {ExplorationSchedule::constant(0.3), ExplorationSchedule::inverse_sqrt_visits()})
    EXPECT_EQ(to_json(exploration_from_json(to_json(ex))), to_json(ex));
}

TEST(AgentSpec, ValidationAndJson) {
  EXPECT_THROW(scq_spec(0.5).validate(), std::invalid_argument);
  EXPECT_THROW(scq_spec(INFINITY).validate(), std::invalid_argument);
  EXPECT_NO_THROW(scq_spec(1.0).validate());
  auto s = scq_spec(3.0);
  s.prev_mode = PrevMode::snapshot;
  EXPECT_EQ(to_json(agent_spec_from_json(to_json(s))), to_json(s));
  auto d = spec(AgentKind::double_q);
  d.update_both = true;
  EXPECT_TRUE(agent_spec_from_json(to_json(d)).update_both);
}

TEST(QLearning, UpdateFormula) {
  const auto mdp = make_bias_example();
  auto agent = make_agent(spec(AgentKind::qlearning, 0.5), mdp);
  auto& q = std::get<QLearningTables>(agent.tables).q;
  q(B, 0) = -1.0;
  q(B, 3) = 2.0;
  q_learning_update(agent, {A, BiasExample::kLeft, 1.0, B, false});
  EXPECT_DOUBLE_EQ(q(A, BiasExample::kLeft), 0.5 * (1.0 + 2.0));
  EXPECT_EQ(agent.count_sa(A, BiasExample::kLeft), 1u);
  q_learning_update(agent, {B, 3, -4.0, BiasExample::kTerminal, true});
  EXPECT_DOUBLE_EQ(q(B, 3), 2.0 + 0.5 * (-4.0 - 2.0));
}

TEST(DoubleQ, SingleUpdateTouchesOneTable) {
  const auto mdp = make_bias_example();
  Rng rng(3);
  int a_branch = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto agent = make_agent(spec(AgentKind::double_q, 0.5), mdp);
    double_q_update(agent, {B, 0, 1.0, BiasExample::kTerminal, true}, rng);
    const auto& t = std::get<DoubleQTables>(agent.tables);
    EXPECT_EQ((t.qa(B, 0) == 0.5) + (t.qb(B, 0) == 0.5), 1);
    EXPECT_EQ(agent.count_sa(B, 0), 1u);
    a_branch += t.qa(B, 0) == 0.5;
  }
  EXPECT_NEAR(a_branch / double(n), 0.5, 0.02);
}

TEST(DoubleQ, UpdateBothUsesCrossEvaluation) {
  const auto mdp = make_bias_example();
  auto s = spec(AgentKind::double_q, 0.5);
  s.update_both = true;
  auto agent = make_agent(s, mdp);
  auto& t = std::get<DoubleQTables>(agent.tables);
  t.qa(B, 1) = 4.0;  // argmax of qa at B
  t.qb(B, 1) = 1.0;
  t.qb(B, 2) = 8.0;  // argmax of qb at B
  t.qa(B, 2) = -2.0;
  Rng rng(1);
  double_q_update(agent, {A, 0, 0.0, B, false}, rng);
  EXPECT_DOUBLE_EQ(t.qa(A, 0), 0.5 * (1.0 * 1.0));  // gamma = 1, qb(B, argmax qa)
  EXPECT_DOUBLE_EQ(t.qb(A, 0), 0.5 * (-2.0));       // qa(B, argmax qb)
  EXPECT_EQ(agent.count_sa(A, 0), 1u);
}

TEST(Scq, TargetExample) {
  const auto mdp = make_bias_example();
  auto agent = make_agent(scq_spec(2.0), mdp);
  auto& t = scq_tables(agent);
  t.q(A, 0) = 1.0;
  t.q(A, 1) = 0.9;
  t.q_prev(A, 0) = 0.5;
  t.q_prev(A, 1) = 0.9;
  Rng rng(1);
  const auto [action, value] = scq_target(agent, A, rng);
  EXPECT_EQ(action, 1u);
  EXPECT_DOUBLE_EQ(value, 0.9);
}

TEST(Scq, BetaOneSelectsOnPrevious) {
  const auto mdp = make_bias_example();
  auto agent = make_agent(scq_spec(1.0), mdp);
  auto& t = scq_tables(agent);
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    for (ActionId a = 0; a < 8; ++a) {
      t.q(B, a) = uniform01(rng);
      t.q_prev(B, a) = uniform01(rng);
    }
    const auto [action, value] = scq_target(agent, B, rng);
    Rng tie(0);
    EXPECT_EQ(action, greedy_action(t.q_prev, B, tie));
    EXPECT_EQ(value, t.q(B, action));
  }
}

TEST(Scq, TerminalUpdateExample) {
  const auto mdp = make_cliff_walk(5, 10);
  auto agent = make_agent(scq_spec(2.0, 0.1), mdp);
  Rng rng(1);
  const StateId s = grid_cell(10, 3, 9);
  scq_update(agent, {s, kSouth, -100.0, grid_cell(10, 4, 9), true}, rng);
  EXPECT_DOUBLE_EQ(scq_tables(agent).q(s, kSouth), -10.0);
  EXPECT_EQ(scq_tables(agent).q_prev(s, kSouth), 0.0);
}

TEST(Scq, PreviousValueBookkeeping) {
  const auto mdp = make_bias_example();
  auto agent = make_agent(scq_spec(2.0, 0.5), mdp);
  Rng rng(1);
  const double T = 8.0;
  const Transition tr{B, 2, T, BiasExample::kTerminal, true};
  scq_update(agent, tr, rng);
  EXPECT_EQ(scq_tables(agent).q(B, 2), T / 2);
  EXPECT_EQ(scq_tables(agent).q_prev(B, 2), 0.0);
  scq_update(agent, tr, rng);
  EXPECT_EQ(scq_tables(agent).q(B, 2), 3 * T / 4);
  EXPECT_EQ(scq_tables(agent).q_prev(B, 2), T / 2);
}

TEST(Scq, SnapshotModeSyncsPreviousEntry) {
  const auto mdp = make_bias_example();
  auto s = scq_spec(2.0, 0.5);
  s.prev_mode = PrevMode::snapshot;
  auto agent = make_agent(s, mdp);
  Rng rng(1);
  scq_update(agent, {B, 0, 4.0, BiasExample::kTerminal, true}, rng);
  EXPECT_EQ(scq_tables(agent).q_prev(B, 0), 0.0);
  scq_update(agent, {B, 1, 4.0, BiasExample::kTerminal, true}, rng);
  // One update later the snapshot has caught up with (B, 0).
  EXPECT_EQ(scq_tables(agent).q_prev(B, 0), 2.0);
  EXPECT_EQ(scq_tables(agent).q_prev(B, 1), 0.0);
}

TEST(ScqProperty, ZeroGapReducesToQLearning) {
  const auto mdp = make_grid_world(3, -6, 4, 0.95);
  Rng rng(21);
  for (int k = 0; k < 500; ++k) {
    auto scq = make_agent(scq_spec(1.0 + 3.0 * uniform01(rng), 0.3), mdp);
    auto ql = make_agent(spec(AgentKind::qlearning, 0.3), mdp);
    auto& qs = scq_tables(scq);
    auto& qq = std::get<QLearningTables>(ql.tables).q;
    for (std::size_t i = 0; i < qq.size(); ++i) qq.values()[i] = std::round(4 * uniform01(rng));
    qs.q = qq;
    qs.q_prev = qq;
    const StateId s = uniform_index(rng, 9);
    const auto t = sample_step(mdp, s, uniform_index(rng, 4), rng);
    scq_update(scq, t, rng);
    q_learning_update(ql, t);
    EXPECT_EQ(qs.q, qq);
  }
}

TEST(ScqProperty, ShiftInvariance) {
  const auto mdp = make_bias_example();
  Rng rng(31);
  for (int k = 0; k < 500; ++k) {
    auto agent = make_agent(scq_spec(1.0 + 4.0 * uniform01(rng)), mdp);
    auto& t = scq_tables(agent);
    for (ActionId a = 0; a < 8; ++a) {
      t.q(B, a) = uniform01(rng);
      t.q_prev(B, a) = uniform01(rng);
    }
    Rng r1(k);
    const auto [a1, v1] = scq_target(agent, B, r1);
    const double c = 16.0 * uniform01(rng) - 8.0;
    for (ActionId a = 0; a < 8; ++a) {
      t.q(B, a) += c;
      t.q_prev(B, a) += c;
    }
    Rng r2(k);
    const auto [a2, v2] = scq_target(agent, B, r2);
    EXPECT_EQ(a1, a2);
    EXPECT_NEAR(v2, v1 + c, 1e-12);
  }
}

TEST(SelectAction, GreedyAndUniform) {
  const auto mdp = make_bias_example();
  auto greedy = spec(AgentKind::qlearning);
  greedy.explore = ExplorationSchedule::constant(0.0);
  auto agent = make_agent(greedy, mdp);
  std::get<QLearningTables>(agent.tables).q(B, 5) = 1.0;
  agent.counts_s[B] = 1;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(select_action(agent, B, rng), 5u);

  auto random = make_agent(spec(AgentKind::random), mdp);
  random.counts_s[B] = 1;
  std::vector<int> hits(8);
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++hits[select_action(random, B, rng)];
  for (int h : hits) EXPECT_NEAR(h / double(n), 0.125, 0.01);
}

TEST(SelectAction, DoubleQActsOnSum) {
  const auto mdp = make_bias_example();
  auto s = spec(AgentKind::double_q);
  s.explore = ExplorationSchedule::constant(0.0);
  auto agent = make_agent(s, mdp);
  auto& t = std::get<DoubleQTables>(agent.tables);
  t.qa(A, 0) = 3.0;
  t.qb(A, 0) = -2.0;
  t.qa(A, 1) = 0.0;
  t.qb(A, 1) = 2.0;
  agent.counts_s[A] = 1;
  Rng rng(1);
  EXPECT_EQ(select_action(agent, A, rng), 1u);
  EXPECT_DOUBLE_EQ(agent.behavior_value(A, 1), 1.0);
  EXPECT_DOUBLE_EQ(agent.behavior_table()(A, 0), 0.5);
}

TEST(RunEpisode, LogsAndCounts) {
  const auto mdp = make_bias_example();
  auto agent = make_agent(scq_spec(2.0, 0.1), mdp);
  Rng rng(5);
  for (int e = 0; e < 50; ++e) {
    const auto log = run_episode(agent, mdp, 100, rng);
    ASSERT_FALSE(log.transitions.empty());
    EXPECT_FALSE(log.truncated);
    EXPECT_TRUE(log.transitions.back().done);
    EXPECT_EQ(log.steps, log.transitions.size());
    EXPECT_EQ(log.transitions.front().s, A);
    double total = 0;
    for (const auto& t : log.transitions) total += t.r;
    EXPECT_DOUBLE_EQ(total, log.total_reward);
  }
  EXPECT_EQ(agent.counts_s[A], 50u);
  EXPECT_TRUE(scq_tables(agent).q.all_finite());
}

TEST(RunEpisode, TruncatesAtStepCap) {
  const auto mdp = make_cliff_walk(5, 10);
  auto agent = make_agent(spec(AgentKind::random), mdp);
  Rng rng(5);
  const auto log = run_episode(agent, mdp, 3, rng);
  EXPECT_TRUE(log.truncated || log.steps < 3);
  EXPECT_LE(log.steps, 3u);
  EXPECT_THROW(agent.behavior_table(), std::logic_error);
}

TEST(RunEpisode, SameSeedSameTrajectory) {
  const auto mdp = make_grid_world(3, -12, 10, 0.95);
  auto s = spec(AgentKind::double_q);
  s.lr = LearningRateSchedule::inverse_count();
  s.explore = ExplorationSchedule::inverse_sqrt_visits();
  auto a1 = make_agent(s, mdp), a2 = make_agent(s, mdp);
  Rng r1(77), r2(77);
  for (int e = 0; e < 20; ++e) {
    const auto l1 = run_episode(a1, mdp, 1000, r1);
    const auto l2 = run_episode(a2, mdp, 1000, r2);
    ASSERT_EQ(l1.steps, l2.steps);
    EXPECT_EQ(l1.total_reward, l2.total_reward);
  }
  EXPECT_EQ(std::get<DoubleQTables>(a1.tables).qa, std::get<DoubleQTables>(a2.tables).qa);
}

TEST(ScqProperty, ConvergesToOptimalValuesOnRandomMdps) {
  Rng env_rng(404);
  for (int k = 0; k < 3; ++k) {
    const auto mdp = make_random_mdp(5, 3, 0.5, 1.0, env_rng);
    const auto q_star = value_iteration(mdp, 1e-12, 100000);
    for (double beta : {1.0, 2.0, 4.0}) {
      auto s = scq_spec(beta);
      s.lr = LearningRateSchedule::inverse_count();
      s.explore = ExplorationSchedule::constant(0.2);
      auto agent = make_agent(s, mdp);
      Rng rng(k * 10 + beta);
      run_episode(agent, mdp, 200000, rng);
      const auto& q = scq_tables(agent).q;
      double err = 0;
      for (std::size_t i = 0; i < q.size(); ++i) err = std::max(err, std::abs(q.values()[i] - q_star.values()[i]));
      EXPECT_LT(err, 0.15) << "mdp " << k << " beta " << beta;
    }
  }
}
