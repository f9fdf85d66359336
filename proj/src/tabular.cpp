#include "ssp/tabular.hpp"

#include <stdexcept>

namespace ssp {

namespace {

Vector q_row(const QTable& q, State i) { return q.row(static_cast<Eigen::Index>(i)).transpose(); }

double& q_at(QTable& q, State i, Action u) { return q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)); }

double actor_sign(Objective objective) { return objective == Objective::kMinimize ? -1.0 : 1.0; }

State sample_nonterminal(const TabularMdp& mdp, RandomStream& rng) {
  return mdp.nonterminal_states()[rng.index(mdp.num_nonterminal())];
}

Action sample_action(const Vector& probs, RandomStream& rng) {
  return rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
}

double value_at(const ValueTable& v, State j) { return v(static_cast<Eigen::Index>(j)); }

}  // namespace

TabularRunState::TabularRunState(const TabularMdp& mdp, StepSchedule critic, StepSchedule actor_steps,
                                 TabularAgentOptions opts, std::uint64_t seed)
    : values(ValueTable::Zero(static_cast<Eigen::Index>(mdp.num_states()))),
      actor(mdp, opts.theta_radius),
      counters(mdp),
      critic_schedule(critic),
      actor_schedule(actor_steps),
      options(opts),
      rng(seed) {
  for (State i : mdp.nonterminal_states())
    for (Action u : mdp.feasible_actions(i)) feasible_pairs.emplace_back(i, u);
}

double advantage(const TabularMdp& mdp, const ValueTable& v, State i, Action u) {
  const auto pr = mdp.transition_row(i, u);
  const auto gr = mdp.cost_row(i, u);
  double k = -value_at(v, i);
  for (State j = 0; j < mdp.num_states(); ++j) {
    if (pr[j] == 0.0) continue;
    k += pr[j] * gr[j];
    if (!mdp.is_terminal(j)) k += pr[j] * value_at(v, j);
  }
  return k;
}

void offline_step(TabularRunState& rs, const TabularMdp& mdp) {
  // Critic sample: Y_n, chi_n(Y_n), eta^1.
  const State y = sample_nonterminal(mdp, rs.rng.component);
  const Action chi = sample_action(rs.actor.probabilities(y), rs.rng.action);
  const Transition t1 = sample_transition(mdp, y, chi, rs.rng.environment);
  const double critic_td = t1.cost + value_at(rs.values, t1.next) - value_at(rs.values, y);

  if (!rs.options.freeze_actor) {
    // Actor sample: Z_n = (i,u), eta^2, both against V_n.
    const auto [i, u] = rs.feasible_pairs[rs.rng.component.index(rs.feasible_pairs.size())];
    const Transition t2 = sample_transition(mdp, i, u, rs.rng.environment);
    const double actor_td = t2.cost + value_at(rs.values, t2.next) - value_at(rs.values, i);
    const double b = rs.counters.record_and_step(i, u, rs.actor_schedule);
    rs.actor.step(i, u, actor_sign(rs.options.objective) * b * actor_td);
  }

  const double a = rs.counters.record_and_step(y, rs.critic_schedule);
  rs.values(static_cast<Eigen::Index>(y)) += a * critic_td;
  ++rs.steps;
}

EpisodeOutcome run_online_episode(TabularRunState& rs, const TabularMdp& mdp) {
  EpisodeOutcome outcome;
  State i = sample_initial_state(mdp, rs.rng.environment);
  while (!mdp.is_terminal(i)) {
    if (outcome.length >= rs.options.episode_cap) throw EpisodeCapError();
    const Action u = sample_action(rs.actor.probabilities(i), rs.rng.action);
    const Transition t = sample_transition(mdp, i, u, rs.rng.environment);
    const double td = t.cost + value_at(rs.values, t.next) - value_at(rs.values, i);
    const double a = rs.counters.record_and_step(i, rs.critic_schedule);
    rs.values(static_cast<Eigen::Index>(i)) += a * td;
    if (!rs.options.freeze_actor) {
      const double b = rs.counters.record_and_step(i, u, rs.actor_schedule);
      rs.actor.step(i, u, actor_sign(rs.options.objective) * b * td);
    }
    outcome.total += t.cost;
    ++outcome.length;
    ++rs.steps;
    i = t.next;
  }
  return outcome;
}

const char* to_string(StepCounting counting) {
  return counting == StepCounting::kPerComponent ? "per-component" : "global";
}

StepCounting parse_step_counting(const std::string& text) {
  if (text == "per-component") return StepCounting::kPerComponent;
  if (text == "global") return StepCounting::kGlobal;
  throw std::invalid_argument("unknown step counting '" + text + "'");
}

QRunState::QRunState(const TabularMdp& mdp, StepSchedule step, ExplorationSchedule explore, Objective obj,
                     std::uint64_t seed)
    : q(QTable::Zero(static_cast<Eigen::Index>(mdp.num_states()), static_cast<Eigen::Index>(mdp.num_actions()))),
      counters(mdp),
      step_schedule(step),
      exploration(explore),
      objective(obj),
      rng(seed) {}

namespace {

Action choose(QRunState& rs, const TabularMdp& mdp, State i) {
  const std::uint64_t visits = rs.counters.record_visit(i);
  return sample_action(behavior_distribution(mdp, i, q_row(rs.q, i), rs.exploration, visits, rs.objective),
                       rs.rng.action);
}

void apply_update(QRunState& rs, State i, Action u, double target) {
  const double alpha = rs.counting == StepCounting::kPerComponent
                           ? rs.counters.record_and_step(i, u, rs.step_schedule)
                           : rs.step_schedule(rs.updates);
  double& entry = q_at(rs.q, i, u);
  entry += alpha * (target - entry);
  ++rs.updates;
  if (rs.after_update) rs.after_update();
}

double optimal_value(const TabularMdp& mdp, const QTable& q, State j, Objective objective) {
  const Vector row = q_row(q, j);
  return row(static_cast<Eigen::Index>(greedy_action(mdp, j, row, objective)));
}

}  // namespace

EpisodeOutcome q_learning_episode(QRunState& rs, const TabularMdp& mdp) {
  EpisodeOutcome outcome;
  State i = sample_initial_state(mdp, rs.rng.environment);
  while (!mdp.is_terminal(i)) {
    if (outcome.length >= rs.episode_cap) throw EpisodeCapError();
    const Action u = choose(rs, mdp, i);
    const Transition t = sample_transition(mdp, i, u, rs.rng.environment);
    const double target =
        t.cost + (mdp.is_terminal(t.next) ? 0.0 : optimal_value(mdp, rs.q, t.next, rs.objective));
    apply_update(rs, i, u, target);
    outcome.total += t.cost;
    ++outcome.length;
    i = t.next;
  }
  return outcome;
}

EpisodeOutcome sarsa_episode(QRunState& rs, const TabularMdp& mdp) {
  EpisodeOutcome outcome;
  State i = sample_initial_state(mdp, rs.rng.environment);
  if (mdp.is_terminal(i)) return outcome;
  Action u = choose(rs, mdp, i);
  for (;;) {
    if (outcome.length >= rs.episode_cap) throw EpisodeCapError();
    const Transition t = sample_transition(mdp, i, u, rs.rng.environment);
    outcome.total += t.cost;
    ++outcome.length;
    if (mdp.is_terminal(t.next)) {
      apply_update(rs, i, u, t.cost);
      break;
    }
    const Action next = choose(rs, mdp, t.next);
    apply_update(rs, i, u, t.cost + q_at(rs.q, t.next, next));
    i = t.next;
    u = next;
  }
  return outcome;
}

ValueTable greedy_values(const TabularMdp& mdp, const QTable& q, Objective objective) {
  ValueTable v = ValueTable::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  for (State i : mdp.nonterminal_states()) v(static_cast<Eigen::Index>(i)) = optimal_value(mdp, q, i, objective);
  return v;
}

}  // namespace ssp
