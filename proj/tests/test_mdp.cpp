#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "scq/envs.hpp"
#include "scq/mdp.hpp"

using namespace scq;

namespace {

// V^pi for a deterministic policy by Gaussian elimination on (I - gamma P) v = r.
std::vector<double> evaluate_policy(const TabularMdp& mdp, const std::vector<ActionId>& pi) {
  const std::size_t n = mdp.n_states();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    a[s][s] = 1.0;
    if (mdp.is_terminal(s)) continue;
    for (const auto& succ : mdp.successors(s, pi[s])) {
      a[s][n] += succ.prob * succ.reward.expected_value();
      if (!mdp.is_terminal(succ.next)) a[s][succ.next] -= mdp.gamma() * succ.prob;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> v(n);
  for (std::size_t s = 0; s < n; ++s) v[s] = a[s][n] / a[s][s];
  return v;
}

// Fewest moves from start to goal on the cliff grid, never entering the cliff.
int cliff_shortest_path(std::size_t h, std::size_t w) {
  auto is_cliff = [&](std::size_t r, std::size_t c) { return r == h - 1 && c > 0 && c + 1 < w; };
  std::vector<int> dist(h * w, -1);
  std::deque<std::pair<std::size_t, std::size_t>> queue{{h - 1, 0}};
  dist[(h - 1) * w] = 0;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const long nr = long(r) + dr[k], nc = long(c) + dc[k];
      if (nr < 0 || nc < 0 || nr >= long(h) || nc >= long(w) || is_cliff(nr, nc)) continue;
      if (dist[nr * w + nc] >= 0) continue;
      dist[nr * w + nc] = dist[r * w + c] + 1;
      queue.emplace_back(nr, nc);
    }
  }
  return dist[(h - 1) * w + (w - 1)];
}

}  // namespace

TEST(MdpBuilder, RejectsInvalidKernels) {
  auto base = [] {
    MdpBuilder b(2);
    b.actions(0, 1).terminal(1);
    return b;
  };
  EXPECT_THROW(base().transition(0, 0, 1, 0.5, DistributionSpec::constant(0)).build(), std::invalid_argument);
  EXPECT_THROW(base().transition(0, 0, 1, -0.5, DistributionSpec::constant(0))
                   .transition(0, 0, 0, 1.5, DistributionSpec::constant(0))
                   .build(),
               std::invalid_argument);
  EXPECT_THROW(base().transition(0, 0, 5, 1.0, DistributionSpec::constant(0)).build(), std::out_of_range);
  EXPECT_THROW(base().transition(0, 0, 1, 1.0, DistributionSpec::constant(0)).start(1).build(),
               std::invalid_argument);
  EXPECT_NO_THROW(base().transition(0, 0, 1, 1.0, DistributionSpec::constant(0)).build());
}

TEST(Mdp, SampleStepFollowsKernel) {
  MdpBuilder b(3);
  b.actions(0, 1).terminal(1).terminal(2);
  b.transition(0, 0, 1, 0.3, DistributionSpec::constant(1.0));
  b.transition(0, 0, 2, 0.7, DistributionSpec::constant(2.0));
  const auto mdp = b.build();
  Rng rng(4);
  int to1 = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto t = sample_step(mdp, 0, 0, rng);
    EXPECT_TRUE(t.done);
    EXPECT_EQ(t.r, t.s_next == 1 ? 1.0 : 2.0);
    to1 += t.s_next == 1;
  }
  EXPECT_NEAR(to1 / double(n), 0.3, 0.01);
  EXPECT_THROW(sample_step(mdp, 1, 0, rng), std::logic_error);
}

TEST(Mdp, GammaOneRequiresProperFlag) {
  MdpBuilder b(1);
  b.actions(0, 1).transition(0, 0, 0, 1.0, DistributionSpec::constant(1.0)).gamma(1.0);
  EXPECT_THROW(value_iteration(b.build(), 1e-8, 1000), std::invalid_argument);
}

TEST(Mdp, ValueIterationThrowsWhenBudgetTooSmall) {
  Rng rng(1);
  const auto mdp = make_random_mdp(5, 3, 0.99, 0.0, rng);
  EXPECT_THROW(value_iteration(mdp, 1e-12, 3), std::runtime_error);
}

TEST(ValueIteration, GridWorldStartValueClosedForm) {
  // Four steps of mean reward -1, then +5 from the goal.
  const double g = 0.95;
  const double oracle = -(1 + g + g * g + g * g * g) + g * g * g * g * 5.0;
  EXPECT_NEAR(oracle, 0.36265625, 1e-14);
  for (auto [lo, hi] : {std::pair{-12.0, 10.0}, {-6.0, 4.0}, {-2.0, 0.0}}) {
    const auto mdp = make_grid_world(3, lo, hi, g);
    const auto q = value_iteration(mdp, 1e-12, 100000);
    EXPECT_NEAR(q.max(mdp.start_state()), oracle, 1e-9);
  }
}

TEST(ValueIteration, BiasExample) {
  const auto mdp = make_bias_example(8);
  const auto q = value_iteration(mdp, 1e-12, 1000);
  EXPECT_NEAR(q(BiasExample::kA, BiasExample::kLeft), -0.1, 1e-12);
  EXPECT_NEAR(q(BiasExample::kA, BiasExample::kRight), 0.0, 1e-12);
  for (ActionId a = 0; a < 8; ++a) EXPECT_NEAR(q(BiasExample::kB, a), -0.1, 1e-12);
}

TEST(ValueIteration, CliffMatchesShortestPath) {
  for (std::size_t w : {10u, 20u}) {
    const auto mdp = make_cliff_walk(5, w);
    const auto q = value_iteration(mdp, 1e-10, 100000);
    EXPECT_EQ(cliff_shortest_path(5, w), int(w) + 1);
    EXPECT_NEAR(q.max(mdp.start_state()), -double(cliff_shortest_path(5, w)), 1e-8);
  }
}

TEST(ValueIterationProperty, RandomMdpsMatchLinearSolveOfGreedyPolicy) {
  Rng rng(17);
  for (int k = 0; k < 20; ++k) {
    const auto mdp = make_random_mdp(5, 3, 0.9, 0.5, rng);
    const auto q = value_iteration(mdp, 1e-11, 100000);
    EXPECT_LE(bellman_residual(mdp, q), 1e-11);
    std::vector<ActionId> pi(mdp.n_states());
    Rng tie(0);
    for (StateId s = 0; s < mdp.n_states(); ++s) pi[s] = greedy_action(q, s, tie);
    const auto v = evaluate_policy(mdp, pi);
    for (StateId s = 0; s < mdp.n_states(); ++s) EXPECT_NEAR(q.max(s), v[s], 1e-8);
  }
}

TEST(BellmanProperty, BackupIsGammaContraction) {
  Rng rng(23);
  for (int k = 0; k < 20; ++k) {
    const auto mdp = make_random_mdp(4, 2, 0.8, 0.0, rng);
    QTable q1 = QTable::for_mdp(mdp), q2 = QTable::for_mdp(mdp);
    for (auto& x : q1.values()) x = 10 * uniform01(rng) - 5;
    for (auto& x : q2.values()) x = 10 * uniform01(rng) - 5;
    const auto b1 = bellman_backup(mdp, q1), b2 = bellman_backup(mdp, q2);
    double d = 0, db = 0;
    for (std::size_t i = 0; i < q1.size(); ++i) {
      d = std::max(d, std::abs(q1.values()[i] - q2.values()[i]));
      db = std::max(db, std::abs(b1.values()[i] - b2.values()[i]));
    }
    EXPECT_LE(db, 0.8 * d + 1e-12);
  }
}

TEST(RandomMdp, RowsAreDistributions) {
  Rng rng(2);
  const auto mdp = make_random_mdp(6, 4, 0.9, 1.0, rng);
  for (StateId s = 0; s < 6; ++s) {
    EXPECT_FALSE(mdp.is_terminal(s));
    for (ActionId a = 0; a < 4; ++a) {
      double total = 0;
      for (const auto& succ : mdp.successors(s, a)) total += succ.prob;
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_GE(expected_reward(mdp, s, a), 0.0);
      EXPECT_LT(expected_reward(mdp, s, a), 1.0);
    }
  }
  EXPECT_THROW(make_random_mdp(3, 2, 1.0, 0.0, rng), std::invalid_argument);
}

TEST(Mdp, JsonRoundTrip) {
  const auto mdp = make_grid_world(3, -6, 4, 0.95);
  const auto back = mdp_from_json(to_json(mdp));
  EXPECT_EQ(to_json(back), to_json(mdp));
  const auto q1 = value_iteration(mdp, 1e-10, 10000);
  const auto q2 = value_iteration(back, 1e-10, 10000);
  EXPECT_EQ(q1, q2);
}

TEST(QTable, ShapeAndAccess) {
  QTable q({2, 3, 1});
  EXPECT_EQ(q.size(), 6u);
  q(1, 2) = 4.0;
  EXPECT_EQ(q.row(1)[2], 4.0);
  EXPECT_EQ(q.max(1), 4.0);
  EXPECT_TRUE(q.all_finite());
  q(0, 0) = std::nan("");
  EXPECT_FALSE(q.all_finite());
}

TEST(GridWorld, Dynamics) {
  const auto mdp = make_grid_world(3, -12, 10, 0.95);
  const StateId start = mdp.start_state();
  EXPECT_EQ(start, grid_cell(3, 2, 0));
  Rng rng(1);
  auto west = sample_step(mdp, start, kWest, rng);
  EXPECT_EQ(west.s_next, start);
  EXPECT_GE(west.r, -12.0);
  EXPECT_LE(west.r, 10.0);
  EXPECT_FALSE(west.done);
  EXPECT_EQ(sample_step(mdp, start, kNorth, rng).s_next, grid_cell(3, 1, 0));
  EXPECT_EQ(sample_step(mdp, start, kEast, rng).s_next, grid_cell(3, 2, 1));
  const StateId goal = grid_cell(3, 0, 2);
  for (ActionId a = 0; a < 4; ++a) {
    const auto t = sample_step(mdp, goal, a, rng);
    EXPECT_EQ(t.r, 5.0);
    EXPECT_TRUE(t.done);
    EXPECT_TRUE(mdp.is_terminal(t.s_next));
  }
  EXPECT_DOUBLE_EQ(expected_reward(mdp, start, kNorth), -1.0);
}

TEST(CliffWalk, Dynamics) {
  const auto mdp = make_cliff_walk(5, 10);
  const StateId start = mdp.start_state();
  EXPECT_EQ(start, grid_cell(10, 4, 0));
  Rng rng(1);
  const auto fall = sample_step(mdp, start, kEast, rng);
  EXPECT_EQ(fall.r, -100.0);
  EXPECT_EQ(fall.s_next, start);
  EXPECT_FALSE(fall.done);
  const auto up = sample_step(mdp, start, kNorth, rng);
  EXPECT_EQ(up.r, -1.0);
  EXPECT_EQ(up.s_next, grid_cell(10, 3, 0));
  const auto finish = sample_step(mdp, grid_cell(10, 3, 9), kSouth, rng);
  EXPECT_EQ(finish.r, -1.0);
  EXPECT_TRUE(finish.done);
  EXPECT_EQ(mdp.gamma(), 1.0);
}

TEST(BiasExampleEnv, Dynamics) {
  const auto mdp = make_bias_example(8);
  Rng rng(1);
  const auto left = sample_step(mdp, BiasExample::kA, BiasExample::kLeft, rng);
  EXPECT_EQ(left.s_next, BiasExample::kB);
  EXPECT_EQ(left.r, 0.0);
  EXPECT_FALSE(left.done);
  const auto right = sample_step(mdp, BiasExample::kA, BiasExample::kRight, rng);
  EXPECT_TRUE(right.done);
  EXPECT_EQ(right.r, 0.0);
  EXPECT_EQ(mdp.n_actions(BiasExample::kB), 8u);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_step(mdp, BiasExample::kB, i % 8, rng).r;
  EXPECT_NEAR(sum / n, -0.1, 0.015);
}
