#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssp/features.hpp"
#include "ssp/mdp.hpp"

namespace ssp {

/// Random SSP: each feasible (i,u) row is a symmetric Dirichlet(1) draw over
/// all states (terminal included) mixed with a point mass on i0 of weight
/// `termination_leak`; costs are i.i.d. uniform on [0,1]; h0 is uniform over
/// non-terminal states. The terminal state is the last index.
TabularMdp random_mdp(std::size_t num_states, std::size_t num_actions, std::uint64_t seed,
                      double termination_leak = 0.05);

/// FrozenLake layout: one row per line, S start, F frozen, H hole, G goal.
struct GridSpec {
  std::vector<std::string> rows;
  double slip = 2.0 / 3.0;

  std::size_t height() const { return rows.size(); }
  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }

  /// Rows separated by newlines or '/'.
  static GridSpec parse(const std::string& text, double slip = 2.0 / 3.0);
  static GridSpec standard_4x4();
  static GridSpec standard_8x8();
  /// Throws ModelError unless the layout is rectangular, uses only S/F/H/G,
  /// has exactly one start and at least one goal, and 0 <= slip < 1.
  void validate() const;
};

enum GridAction : Action { kLeft = 0, kDown = 1, kRight = 2, kUp = 3 };

/// A FrozenLake MDP together with the cell of every state.
struct GridWorld {
  TabularMdp mdp;
  /// Row-major cell index per non-terminal state.
  std::vector<std::size_t> cell_of_state;
};

/// Slippery grid: the intended move with probability 1-slip, each perpendicular
/// move with slip/2; moves off the grid stay in place. Entering the goal ends
/// the episode with reward 1, entering a hole ends it with reward 0. Holes and
/// the goal are not states of their own: non-terminal states are the start
/// and frozen cells in row-major order, followed by the terminal state.
/// Intended for the maximization objective. Holes and the goal share the
/// terminal state, so when one move can end in either, g(i,u,i0) is the goal's
/// share of the terminating mass; expected rewards are exact.
GridWorld frozen_lake(const GridSpec& spec);

/// MDP plus the feature maps used with it.
struct FeaturedMdp {
  TabularMdp mdp;
  StateActionFeatures action_features;
  StateFeatures state_features;
};

/// Two non-terminal states i1, i2 (indices 0, 1), terminal index 2, actions
/// u1, u2 (indices 0, 1), all costs zero. u1 leads to i2 and u2 to i1 with
/// probability 0.9, otherwise to i0. phi_1(., u1) = (1,0), phi_1(., u2) = (0,1);
/// value feature phi(i1) = phi(i2) = (1). h0 = (0.5, 0.5).
FeaturedMdp qlfa_counterexample();

/// Deterministic chain: i1 -u0-> i2 (cost 0), i1 -u1-> i3 (cost 0),
/// i2 -u0-> i0 (cost -2), i3 -u0-> i0 (cost -1); i2 and i3 only allow u0.
/// States i1, i2, i3 are indices 0, 1, 2, terminal index 3; start i1.
/// phi_1(i1,u0) = e1, phi_1(i1,u1) = e2, phi_1(i2,u0) = phi_1(i3,u0) = e3;
/// phi(i1) = (1,0), phi(i2) = phi(i3) = (0,1).
FeaturedMdp sarsa_chatter_mdp();

}  // namespace ssp
