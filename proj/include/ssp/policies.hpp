#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssp/features.hpp"
#include "ssp/mdp.hpp"

namespace ssp {

/// Softmax of `logits` restricted to the feasible actions of state i, with
/// max-subtraction. Infeasible entries are exactly 0.
Vector masked_softmax(const TabularMdp& mdp, State i, const Vector& logits);

/// Componentwise clamp to [-radius, radius].
inline double project_box(double x, double radius) { return x < -radius ? -radius : (x > radius ? radius : x); }

template <typename Derived>
void project_box(Eigen::DenseBase<Derived>& x, double radius) {
  x = x.derived().cwiseMax(-radius).cwiseMin(radius);
}

/// Tabular softmax policy pi(i,u) proportional to exp(theta(i,u)), with theta
/// kept in the box [-radius, radius].
class SoftmaxActor {
 public:
  SoftmaxActor(const TabularMdp& mdp, double radius);

  Vector probabilities(State i) const;
  StationaryPolicy policy() const;

  double theta(State i, Action u) const { return theta_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)); }
  /// theta(i,u) <- clamp(value).
  void set(State i, Action u, double value);
  /// theta(i,u) <- clamp(theta(i,u) + delta).
  void step(State i, Action u, double delta) { set(i, u, theta(i, u) + delta); }

  const Matrix& parameters() const { return theta_; }
  double radius() const { return radius_; }

 private:
  const TabularMdp* mdp_;
  Matrix theta_;
  double radius_;
};

/// Linear softmax policy over state-action features, optionally mixed with the
/// uniform distribution:  eps/|A_i| + (1-eps) softmax(theta^T phi_1(i,.)).
class LinearSoftmaxActor {
 public:
  LinearSoftmaxActor(const TabularMdp& mdp, StateActionFeatures features, double radius, double epsilon = 0.0);

  Vector probabilities(State i) const;
  StationaryPolicy policy() const;
  /// psi(i,u) = grad_theta log pi(i,u), exact through the uniform mixture.
  Vector log_gradient(State i, Action u) const;

  const Vector& parameters() const { return theta_; }
  /// theta <- clamp(value).
  void set_parameters(const Vector& value);
  /// theta <- clamp(theta + delta).
  void step(const Vector& delta) { set_parameters(theta_ + delta); }

  const StateActionFeatures& features() const { return features_; }
  double radius() const { return radius_; }
  double epsilon() const { return epsilon_; }
  std::size_t dim() const { return features_.dim(); }

 private:
  Vector logits(State i) const;

  const TabularMdp* mdp_;
  StateActionFeatures features_;
  Vector theta_;
  double radius_;
  double epsilon_;
};

enum class ExplorationKind { kEpsGreedyGlie, kSoftmaxGlie, kConstantEps, kEpsSoftmax };

const char* to_string(ExplorationKind kind);
ExplorationKind parse_exploration_kind(const std::string& text);

struct ExplorationParams {
  double epsilon = 0.0;      // uniform-mixture weight
  double temperature = 0.0;  // Boltzmann temperature; 0 selects the greedy action
};

/// Behavior-policy schedules for value-based learners.
///   eps-greedy-glie  eps = min(1, c/(n+1)), greedy otherwise
///   softmax-glie     Boltzmann with temperature C/log(n+2)
///   constant-eps     eps-greedy with fixed eps
///   eps-softmax      eps-uniform mixed with a fixed-temperature Boltzmann
/// n is the visit count of the current state.
struct ExplorationSchedule {
  ExplorationKind kind = ExplorationKind::kEpsGreedyGlie;
  double c = 1.0;
  double temperature_c = 1.0;
  double epsilon = 0.1;
  double temperature = 1.0;

  ExplorationParams params(std::uint64_t visit_count) const;
};

/// Action distribution at state i from action values. Preferences are -Q/tau
/// under minimization and Q/tau under maximization; the greedy action is the
/// lowest-index optimum.
Vector behavior_distribution(const TabularMdp& mdp, State i, const Vector& action_values,
                             const ExplorationSchedule& schedule, std::uint64_t visit_count,
                             Objective objective);

/// Lowest-index optimal feasible action.
Action greedy_action(const TabularMdp& mdp, State i, const Vector& action_values, Objective objective);

}  // namespace ssp
