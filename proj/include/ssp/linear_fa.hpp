#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "ssp/features.hpp"
#include "ssp/mdp.hpp"
#include "ssp/policies.hpp"
#include "ssp/rng.hpp"
#include "ssp/schedules.hpp"
#include "ssp/tabular.hpp"

namespace ssp {

/// Actor-critic with linear function approximation. One critic step and one
/// projected actor step per episode, both indexed by the episode counter.
struct FaRunState {
  FaRunState(StateFeatures critic_features, LinearSoftmaxActor actor,
             StepSchedule critic, StepSchedule actor_steps, Objective objective, std::uint64_t seed);

  Vector v;  // critic weights, V(i) ~ v^T phi(i)
  StateFeatures phi;
  LinearSoftmaxActor actor;
  StepSchedule critic_schedule;
  StepSchedule actor_schedule;
  Objective objective;
  bool freeze_actor = false;
  std::size_t episode_cap = kDefaultEpisodeCap;
  RandomStreams rng;
  std::uint64_t episodes = 0;
};

/// Rolls one episode under the current (frozen within the episode) actor and
/// applies
///   v     <- v + a(n) sum_k d_k phi(i_k)
///   theta <- clamp(theta -+ b(n) sum_k d_k psi(i_k, u_k))
/// with d_k = g_k + v^T phi(i_{k+1}) - v^T phi(i_k) formed from the
/// episode-start v. The sums are accumulated on the fly.
EpisodeOutcome ac_fa_episode(FaRunState& rs, const TabularMdp& mdp);

/// Run state shared by Q-learning and SARSA with linear function approximation.
struct LfaQRunState {
  LfaQRunState(const TabularMdp& mdp, StateActionFeatures features, StepSchedule step,
               ExplorationSchedule explore, Objective objective, std::uint64_t seed);

  Vector q;  // Q(i,u) ~ q^T phi_1(i,u)
  StateActionFeatures features;
  VisitCounters counters;  // state counts drive exploration
  StepSchedule step_schedule;
  ExplorationSchedule exploration;
  Objective objective;
  std::size_t episode_cap = kDefaultEpisodeCap;
  double divergence_guard = 1e12;
  RandomStreams rng;
  std::uint64_t updates = 0;  // global step index for alpha(t)
  std::uint64_t episodes = 0;
  bool diverged = false;
  std::optional<std::uint64_t> diverged_at;  // update index at which the guard tripped
  std::function<void()> after_update;
};

/// Off-policy semi-gradient Q-learning episode. Once ||q||_inf exceeds the
/// divergence guard the run is flagged and the episode stops early; no error
/// is raised.
EpisodeOutcome q_lfa_episode(LfaQRunState& rs, const TabularMdp& mdp);
/// On-policy semi-gradient SARSA episode with the sampled next action.
EpisodeOutcome sarsa_lfa_episode(LfaQRunState& rs, const TabularMdp& mdp);

/// q^T phi_1(i,.) for all actions.
Vector linear_action_values(const TabularMdp& mdp, const StateActionFeatures& features, const Vector& q, State i);

/// Expected per-episode critic dynamics under pi:
///   A = Phi^T H (P_pi - I) Phi,  b = Phi^T H R_pi,  H = diag(occupancy).
struct ExpectedDynamics {
  Matrix a;
  Vector b;
};

ExpectedDynamics expected_dynamics(const TabularMdp& mdp, const StationaryPolicy& pi, const StateFeatures& phi);

/// Equilibrium of vdot = A v + b, i.e. the solution of A v = -b.
Vector fa_fixed_point(const ExpectedDynamics& dynamics);

/// J(theta) = h0^T V^theta.
double policy_objective(const TabularMdp& mdp, const LinearSoftmaxActor& actor);

/// grad J = sum_i h(i) sum_u pi(i,u) psi(i,u) Q^theta(i,u), evaluated exactly.
Vector exact_policy_gradient(const TabularMdp& mdp, const LinearSoftmaxActor& actor);

/// Expected actor direction with critic v:
///   sum_i h(i) sum_u pi(i,u) [sum_j p g + sum_j p v^T phi(j) - v^T phi(i)] psi(i,u).
Vector expected_actor_direction(const TabularMdp& mdp, const LinearSoftmaxActor& actor, const StateFeatures& phi,
                                const Vector& v);

/// || expected_actor_direction(v^theta) - grad J ||_2 with v^theta the critic
/// fixed point for the actor's current policy.
double approximation_error(const TabularMdp& mdp, const LinearSoftmaxActor& actor, const StateFeatures& phi);

}  // namespace ssp
