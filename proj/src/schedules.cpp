#include "ssp/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace ssp {

const char* to_string(ScheduleFamily family) {
  switch (family) {
    case ScheduleFamily::kAcFast: return "ac-fast";
    case ScheduleFamily::kAcSlow: return "ac-slow";
    case ScheduleFamily::kCaFast: return "ca-fast";
    case ScheduleFamily::kCaSlow: return "ca-slow";
    case ScheduleFamily::kPowerLaw: return "power-law";
  }
  return "?";
}

ScheduleFamily parse_schedule_family(const std::string& text) {
  for (auto f : {ScheduleFamily::kAcFast, ScheduleFamily::kAcSlow, ScheduleFamily::kCaFast,
                 ScheduleFamily::kCaSlow, ScheduleFamily::kPowerLaw})
    if (text == to_string(f)) return f;
  throw std::invalid_argument("unknown schedule family '" + text + "'");
}

StepSchedule::StepSchedule(ScheduleFamily family, double scale, double exponent)
    : family_(family), scale_(scale), exponent_(exponent) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("schedule scale must be positive");
  if (family == ScheduleFamily::kPowerLaw && !(exponent > 0.5 && exponent <= 1.0))
    throw std::invalid_argument("power-law exponent must lie in (0.5, 1]");
}

double StepSchedule::eval(std::uint64_t n) const {
  const double x = static_cast<double>(n);
  switch (family_) {
    case ScheduleFamily::kAcFast:
    case ScheduleFamily::kCaSlow:
      return scale_ * std::log(x + 2.0) / (x + 2.0);
    case ScheduleFamily::kAcSlow:
      return scale_ / (x + 1.0);
    case ScheduleFamily::kCaFast:
      return scale_ / ((x + 2.0) * std::log(x + 2.0));
    case ScheduleFamily::kPowerLaw:
      return scale_ / std::pow(x + 1.0, exponent_);
  }
  return 0.0;
}

StepSchedule default_critic_schedule(Variant variant, double scale) {
  return StepSchedule(variant == Variant::kActorCritic ? ScheduleFamily::kAcFast : ScheduleFamily::kCaFast, scale);
}

StepSchedule default_actor_schedule(Variant variant, double scale) {
  return StepSchedule(variant == Variant::kActorCritic ? ScheduleFamily::kAcSlow : ScheduleFamily::kCaSlow, scale);
}

VisitCounters::VisitCounters(const TabularMdp& mdp)
    : num_actions_(mdp.num_actions()),
      terminal_(mdp.terminal()),
      state_(mdp.num_states(), 0),
      pair_(mdp.num_states() * mdp.num_actions(), 0) {}

void VisitCounters::check_nonterminal(State i) const {
  if (i == terminal_) throw std::invalid_argument("visit counters: terminal state is never updated");
  if (i >= state_.size()) throw std::out_of_range("visit counters: state out of range");
}

double VisitCounters::record_and_step(State i, const StepSchedule& schedule) {
  check_nonterminal(i);
  return schedule(state_[i]++);
}

std::uint64_t VisitCounters::record_visit(State i) {
  check_nonterminal(i);
  return state_[i]++;
}

double VisitCounters::record_and_step(State i, Action u, const StepSchedule& schedule) {
  check_nonterminal(i);
  if (u >= num_actions_) throw std::out_of_range("visit counters: action out of range");
  return schedule(pair_[i * num_actions_ + u]++);
}

}  // namespace ssp
