#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ssp/mdp.hpp"

namespace ssp {

/// Step-size families. Natural logarithms throughout.
///   ac-fast    scale * log(n+2)/(n+2)     actor-critic critic step
///   ac-slow    scale / (n+1)              actor-critic actor step
///   ca-fast    scale / ((n+2) log(n+2))   critic-actor critic step
///   ca-slow    scale * log(n+2)/(n+2)     critic-actor actor step
///   power-law  scale / (n+1)^exponent,    exponent in (0.5, 1]
enum class ScheduleFamily { kAcFast, kAcSlow, kCaFast, kCaSlow, kPowerLaw };

const char* to_string(ScheduleFamily family);
ScheduleFamily parse_schedule_family(const std::string& text);

class StepSchedule {
 public:
  explicit StepSchedule(ScheduleFamily family, double scale = 1.0, double exponent = 1.0);

  double operator()(std::uint64_t n) const { return eval(n); }
  double eval(std::uint64_t n) const;

  ScheduleFamily family() const { return family_; }
  double scale() const { return scale_; }
  double exponent() const { return exponent_; }

 private:
  ScheduleFamily family_;
  double scale_;
  double exponent_;
};

/// Tabular two-timescale variants: identical recursions, different schedules.
enum class Variant { kActorCritic, kCriticActor };

/// Default schedules: AC uses a fast critic, CA a fast actor.
StepSchedule default_critic_schedule(Variant variant, double scale = 1.0);
StepSchedule default_actor_schedule(Variant variant, double scale = 1.0);

/// Per-component update counts nu_1(i), nu_2(i,u). The step handed out for
/// the k-th update of a component is schedule(k), k counted from 0.
class VisitCounters {
 public:
  explicit VisitCounters(const TabularMdp& mdp);

  double record_and_step(State i, const StepSchedule& schedule);
  double record_and_step(State i, Action u, const StepSchedule& schedule);
  /// Increments nu_1(i) without a step size; returns the pre-visit count.
  std::uint64_t record_visit(State i);

  std::uint64_t state_count(State i) const { return state_[i]; }
  std::uint64_t pair_count(State i, Action u) const { return pair_[i * num_actions_ + u]; }

 private:
  void check_nonterminal(State i) const;

  std::size_t num_actions_;
  State terminal_;
  std::vector<std::uint64_t> state_;
  std::vector<std::uint64_t> pair_;
};

}  // namespace ssp
