#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssp/mdp.hpp"
#include "ssp/policies.hpp"
#include "ssp/rng.hpp"
#include "ssp/schedules.hpp"

namespace ssp {

inline constexpr std::size_t kDefaultEpisodeCap = 100'000;

/// Raised when a trajectory exceeds its step cap without reaching i0.
class EpisodeCapError : public std::runtime_error {
 public:
  EpisodeCapError() : std::runtime_error("episode did not terminate") {}
};

struct EpisodeOutcome {
  double total = 0.0;        // accumulated cost (or reward in max mode)
  std::size_t length = 0;    // transitions until i0
};

struct TabularAgentOptions {
  Objective objective = Objective::kMinimize;
  double theta_radius = 10.0;
  bool freeze_actor = false;  // policy evaluation only
  std::size_t episode_cap = kDefaultEpisodeCap;
};

/// Run state of the two-timescale tabular actor-critic / critic-actor.
/// The same recursions serve both variants; only the schedules differ.
struct TabularRunState {
  TabularRunState(const TabularMdp& mdp, StepSchedule critic, StepSchedule actor,
                  TabularAgentOptions options, std::uint64_t seed);

  ValueTable values;  // V(i0) is pinned to 0
  SoftmaxActor actor;
  VisitCounters counters;
  StepSchedule critic_schedule;
  StepSchedule actor_schedule;
  TabularAgentOptions options;
  RandomStreams rng;
  std::vector<std::pair<State, Action>> feasible_pairs;
  std::uint64_t steps = 0;
};

/// One offline iteration: a critic update at a uniformly sampled non-terminal
/// state, then an actor update at a uniformly sampled feasible (state, action)
/// pair. Both temporal differences are formed from the pre-update critic.
void offline_step(TabularRunState& rs, const TabularMdp& mdp);

/// One online episode from h0. Every visited (i_k, u_k, i_{k+1}) drives one
/// critic update at i_k and one actor update at (i_k, u_k) using the same
/// observed transition. Throws EpisodeCapError on non-termination.
EpisodeOutcome run_online_episode(TabularRunState& rs, const TabularMdp& mdp);

/// Advantage term k_{iu}(V) = sum_j p g + sum_{j non-terminal} p V(j) - V(i).
double advantage(const TabularMdp& mdp, const ValueTable& v, State i, Action u);

/// How step sizes of value-based learners are indexed.
enum class StepCounting {
  kPerComponent,  // alpha(nu_2(i,u)): visits of the updated pair
  kGlobal,        // alpha(t): total number of updates so far
};

const char* to_string(StepCounting counting);
StepCounting parse_step_counting(const std::string& text);

/// Run state shared by tabular Q-learning and SARSA.
struct QRunState {
  QRunState(const TabularMdp& mdp, StepSchedule step, ExplorationSchedule explore, Objective objective,
            std::uint64_t seed);

  QTable q;  // terminal row pinned to 0
  VisitCounters counters;  // state counts drive exploration, pair counts the steps
  StepSchedule step_schedule;
  ExplorationSchedule exploration;
  Objective objective;
  StepCounting counting = StepCounting::kPerComponent;
  std::size_t episode_cap = kDefaultEpisodeCap;
  RandomStreams rng;
  std::uint64_t updates = 0;
  /// Called after every parameter update when set.
  std::function<void()> after_update;
};

/// Tabular Q-learning episode: Q(i,u) += alpha [g + opt_u' Q(j,u') - Q(i,u)].
EpisodeOutcome q_learning_episode(QRunState& rs, const TabularMdp& mdp);
/// Tabular SARSA episode: Q(i,u) += alpha [g + Q(j,u') - Q(i,u)], u' the chosen next action.
EpisodeOutcome sarsa_episode(QRunState& rs, const TabularMdp& mdp);

/// V(i) = opt_u Q(i,u) over feasible actions.
ValueTable greedy_values(const TabularMdp& mdp, const QTable& q, Objective objective);

}  // namespace ssp
