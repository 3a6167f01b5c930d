#include "scq/envs.hpp"

#include <stdexcept>
#include <vector>

namespace scq {
namespace {

StateId move(std::size_t height, std::size_t width, StateId cell, ActionId action) {
  std::size_t row = cell / width;
  std::size_t col = cell % width;
  switch (action) {
    case kNorth:
      if (row > 0) --row;
      break;
    case kSouth:
      if (row + 1 < height) ++row;
      break;
    case kEast:
      if (col + 1 < width) ++col;
      break;
    case kWest:
      if (col > 0) --col;
      break;
    default:
      throw std::out_of_range("unknown grid action");
  }
  return grid_cell(width, row, col);
}

}  // namespace

TabularMdp make_bias_example(std::size_t k_b_actions) {
  if (k_b_actions < 1) throw std::invalid_argument("bias example needs k_b_actions >= 1");
  MdpBuilder b(3);
  b.actions(BiasExample::kA, 2)
      .actions(BiasExample::kB, k_b_actions)
      .terminal(BiasExample::kTerminal)
      .transition(BiasExample::kA, BiasExample::kLeft, BiasExample::kB, 1.0,
                  DistributionSpec::constant(0.0))
      .transition(BiasExample::kA, BiasExample::kRight, BiasExample::kTerminal, 1.0,
                  DistributionSpec::constant(0.0));
  for (ActionId a = 0; a < k_b_actions; ++a) {
    b.transition(BiasExample::kB, a, BiasExample::kTerminal, 1.0,
                 DistributionSpec::gaussian(-0.1, 1.0));
  }
  return b.gamma(1.0).start(BiasExample::kA).proper_episodic().build();
}

TabularMdp make_grid_world(std::size_t n, double reward_lo, double reward_hi, double gamma) {
  if (n < 2) throw std::invalid_argument("grid world needs n >= 2");
  const auto step_reward = DistributionSpec::uniform(reward_lo, reward_hi);
  const StateId terminal = n * n;
  const StateId start = grid_cell(n, n - 1, 0);
  const StateId goal = grid_cell(n, 0, n - 1);
  MdpBuilder b(n * n + 1);
  b.terminal(terminal);
  for (StateId cell = 0; cell < n * n; ++cell) {
    b.actions(cell, 4);
    for (ActionId a = 0; a < 4; ++a) {
      if (cell == goal) {
        b.transition(cell, a, terminal, 1.0, DistributionSpec::constant(5.0));
      } else {
        b.transition(cell, a, move(n, n, cell, a), 1.0, step_reward);
      }
    }
  }
  // With a negative mean step reward every non-terminating policy has
  // value -inf, so gamma = 1 is admissible for the oracle.
  return b.gamma(gamma).start(start).proper_episodic(step_reward.expected_value() < 0.0).build();
}

TabularMdp make_cliff_walk(std::size_t height, std::size_t width) {
  if (height < 2 || width < 3) throw std::invalid_argument("cliff walk needs height >= 2, width >= 3");
  const StateId start = grid_cell(width, height - 1, 0);
  const StateId goal = grid_cell(width, height - 1, width - 1);
  auto is_cliff = [&](StateId cell) {
    return cell / width == height - 1 && cell != start && cell != goal;
  };
  MdpBuilder b(height * width);
  b.terminal(goal).actions(goal, 4);
  for (StateId cell = 0; cell < height * width; ++cell) {
    if (cell == goal) continue;
    b.actions(cell, 4);
    for (ActionId a = 0; a < 4; ++a) {
      const StateId next = move(height, width, cell, a);
      if (is_cliff(next)) {
        b.transition(cell, a, start, 1.0, DistributionSpec::constant(-100.0));
      } else {
        b.transition(cell, a, next, 1.0, DistributionSpec::constant(-1.0));
      }
    }
  }
  return b.gamma(1.0).start(start).proper_episodic().build();
}

TabularMdp make_random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                           double reward_std, Rng& rng) {
  if (!(gamma < 1.0)) throw std::invalid_argument("random MDPs have no terminal states; need gamma < 1");
  MdpBuilder b(n_states);
  std::exponential_distribution<double> expo(1.0);
  for (StateId s = 0; s < n_states; ++s) {
    b.actions(s, n_actions);
    for (ActionId a = 0; a < n_actions; ++a) {
      const auto reward = DistributionSpec::gaussian(uniform01(rng), reward_std);
      std::vector<double> w(n_states);
      double total = 0.0;
      for (auto& x : w) total += (x = expo(rng));
      // Put rounding slack on the last entry so the row sums to 1 within 1e-12.
      double acc = 0.0;
      for (StateId next = 0; next + 1 < n_states; ++next) {
        const double p = w[next] / total;
        acc += p;
        b.transition(s, a, next, p, reward);
      }
      b.transition(s, a, n_states - 1, std::max(0.0, 1.0 - acc), reward);
    }
  }
  return b.gamma(gamma).start(0).build();
}

}  // namespace scq
