#pragma once

#include <cstddef>

#include "scq/mdp.hpp"
#include "scq/random.hpp"

namespace scq {

/// Movement actions shared by the grid tasks.
enum GridAction : ActionId { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3 };

/// Two-state bias example. State A (id 0): action 0 = left goes to B with
/// reward 0, action 1 = right terminates with reward 0. State B (id 1): each
/// of k_b_actions actions terminates with reward N(-0.1, 1). Terminal id 2.
struct BiasExample {
  static constexpr StateId kA = 0;
  static constexpr StateId kB = 1;
  static constexpr StateId kTerminal = 2;
  static constexpr ActionId kLeft = 0;
  static constexpr ActionId kRight = 1;
};

TabularMdp make_bias_example(std::size_t k_b_actions = 8);

/// n x n grid, cell id = row * n + col with row 0 the northern edge. Start
/// is the south-west corner, the goal the north-east corner. Any action in
/// the goal pays +5 and moves to the absorbing terminal id n*n; every other
/// step pays uniform(reward_lo, reward_hi). Off-grid moves stay in place.
TabularMdp make_grid_world(std::size_t n, double reward_lo, double reward_hi, double gamma);

/// height x width cliff task, undiscounted. Start bottom-left, goal (terminal)
/// bottom-right. Stepping into the bottom-row cells strictly between them
/// pays -100 and returns the agent to the start without ending the episode;
/// every other move pays -1.
TabularMdp make_cliff_walk(std::size_t height, std::size_t width);

/// Dense random MDP without terminal states: Dirichlet(1,...,1) kernel rows,
/// per-(s,a) reward mean in [0,1) with gaussian noise of the given std.
TabularMdp make_random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                           double reward_std, Rng& rng);

inline StateId grid_cell(std::size_t width, std::size_t row, std::size_t col) {
  return row * width + col;
}

}  // namespace scq
