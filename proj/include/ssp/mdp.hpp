#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssp/rng.hpp"

namespace ssp {

using State = std::size_t;
using Action = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Value per state, indexed by full state id. The terminal entry is pinned to 0.
using ValueTable = Vector;
/// Q-value per (state, action), shape num_states x num_actions. Terminal row is 0.
using QTable = Matrix;
/// Action distribution per state, shape num_states x num_actions. The terminal
/// row is unused and kept at 0; infeasible actions carry probability 0.
using StationaryPolicy = Matrix;

enum class Objective { kMinimize, kMaximize };

const char* to_string(Objective objective);
Objective parse_objective(const std::string& text);

/// Raised when an MDP, policy or feature map violates a structural invariant.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite stochastic shortest path model with an explicit absorbing terminal
/// state. An action whose transition row is all zero is infeasible in that
/// state; every non-terminal state needs at least one feasible action.
class TabularMdp {
 public:
  TabularMdp(std::size_t num_states, std::size_t num_actions, State terminal);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  State terminal() const { return terminal_; }
  bool is_terminal(State i) const { return i == terminal_; }

  double p(State i, Action u, State j) const { return prob_[offset(i, u) + j]; }
  double g(State i, Action u, State j) const { return cost_[offset(i, u) + j]; }
  std::span<const double> transition_row(State i, Action u) const {
    return {prob_.data() + offset(i, u), num_states_};
  }
  std::span<const double> cost_row(State i, Action u) const {
    return {cost_.data() + offset(i, u), num_states_};
  }

  /// Sets p(i,u,j) and g(i,u,j). The cost of a zero-probability transition is
  /// stored as 0.
  void set_transition(State i, Action u, State j, double probability, double cost);
  /// Makes i0 absorbing with zero cost under every action.
  void make_terminal_absorbing();

  const Vector& initial_distribution() const { return initial_; }
  void set_initial_distribution(Vector h0);

  bool feasible(State i, Action u) const { return feasible_[i * num_actions_ + u] != 0; }
  std::size_t num_feasible(State i) const;
  std::vector<Action> feasible_actions(State i) const;

  /// Non-terminal states in ascending order; the row order of every reduced
  /// matrix and vector produced by the solvers.
  const std::vector<State>& nonterminal_states() const { return nonterminal_; }
  std::size_t num_nonterminal() const { return nonterminal_.size(); }
  /// Position of non-terminal state i in nonterminal_states().
  std::size_t reduced_index(State i) const;

  /// Expected one-step cost sum_j p(i,u,j) g(i,u,j).
  double expected_cost(State i, Action u) const;

  /// Restricts a full-length state vector to non-terminal states.
  Vector reduce(const Vector& full) const;
  /// Expands a reduced vector to full length, terminal entry 0.
  Vector expand(const Vector& reduced) const;

  friend bool operator==(const TabularMdp& a, const TabularMdp& b);

 private:
  std::size_t offset(State i, Action u) const { return (i * num_actions_ + u) * num_states_; }
  void refresh_feasibility(State i, Action u);

  std::size_t num_states_;
  std::size_t num_actions_;
  State terminal_;
  std::vector<double> prob_;
  std::vector<double> cost_;
  std::vector<unsigned char> feasible_;
  std::vector<State> nonterminal_;
  Vector initial_;
};

/// Throws ModelError naming the first violated invariant.
void validate(const TabularMdp& mdp);

struct Transition {
  State next;
  double cost;
};

/// Draws j ~ p(i,u,.) by inverse CDF over ascending state index.
Transition sample_transition(const TabularMdp& mdp, State i, Action u, RandomStream& rng);

/// Draws a start state from the initial distribution.
State sample_initial_state(const TabularMdp& mdp, RandomStream& rng);

}  // namespace ssp
