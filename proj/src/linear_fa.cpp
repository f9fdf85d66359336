#include "ssp/linear_fa.hpp"

#include <Eigen/LU>

#include "ssp/solvers.hpp"

namespace ssp {

namespace {

Action sample_action(const Vector& probs, RandomStream& rng) {
  return rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
}

double actor_sign(Objective objective) { return objective == Objective::kMinimize ? -1.0 : 1.0; }

}  // namespace

FaRunState::FaRunState(StateFeatures critic_features, LinearSoftmaxActor policy,
                       StepSchedule critic, StepSchedule actor_steps, Objective obj, std::uint64_t seed)
    : v(Vector::Zero(static_cast<Eigen::Index>(critic_features.dim()))),
      phi(std::move(critic_features)),
      actor(std::move(policy)),
      critic_schedule(critic),
      actor_schedule(actor_steps),
      objective(obj),
      rng(seed) {}

EpisodeOutcome ac_fa_episode(FaRunState& rs, const TabularMdp& mdp) {
  EpisodeOutcome outcome;
  Vector critic_sum = Vector::Zero(rs.v.size());
  Vector actor_sum = Vector::Zero(rs.actor.parameters().size());
  State i = sample_initial_state(mdp, rs.rng.environment);
  while (!mdp.is_terminal(i)) {
    if (outcome.length >= rs.episode_cap) throw EpisodeCapError();
    const Action u = sample_action(rs.actor.probabilities(i), rs.rng.action);
    const Transition t = sample_transition(mdp, i, u, rs.rng.environment);
    const double d = t.cost + rs.phi.dot(rs.v, t.next) - rs.phi.dot(rs.v, i);
    critic_sum += d * rs.phi.row(i).transpose();
    if (!rs.freeze_actor) actor_sum += d * rs.actor.log_gradient(i, u);
    outcome.total += t.cost;
    ++outcome.length;
    i = t.next;
  }
  const std::uint64_t n = rs.episodes++;
  rs.v += rs.critic_schedule(n) * critic_sum;
  if (!rs.freeze_actor) rs.actor.step(actor_sign(rs.objective) * rs.actor_schedule(n) * actor_sum);
  return outcome;
}

LfaQRunState::LfaQRunState(const TabularMdp& mdp, StateActionFeatures phi1, StepSchedule step,
                           ExplorationSchedule explore, Objective obj, std::uint64_t seed)
    : q(Vector::Zero(static_cast<Eigen::Index>(phi1.dim()))),
      features(std::move(phi1)),
      counters(mdp),
      step_schedule(step),
      exploration(explore),
      objective(obj),
      rng(seed) {}

Vector linear_action_values(const TabularMdp& mdp, const StateActionFeatures& features, const Vector& q, State i) {
  Vector values(static_cast<Eigen::Index>(mdp.num_actions()));
  for (Action u = 0; u < mdp.num_actions(); ++u) values(static_cast<Eigen::Index>(u)) = features.dot(q, i, u);
  return values;
}

namespace {

Action choose(LfaQRunState& rs, const TabularMdp& mdp, State i) {
  const std::uint64_t visits = rs.counters.record_visit(i);
  const Vector values = linear_action_values(mdp, rs.features, rs.q, i);
  return sample_action(behavior_distribution(mdp, i, values, rs.exploration, visits, rs.objective), rs.rng.action);
}

// Returns false once the divergence guard trips.
bool apply_update(LfaQRunState& rs, State i, Action u, double target) {
  const double alpha = rs.step_schedule(rs.updates);
  const double td = target - rs.features.dot(rs.q, i, u);
  rs.q += (alpha * td) * rs.features.row(i, u).transpose();
  ++rs.updates;
  if (rs.after_update) rs.after_update();
  if (!rs.q.allFinite() || rs.q.lpNorm<Eigen::Infinity>() > rs.divergence_guard) {
    rs.diverged = true;
    rs.diverged_at = rs.updates;
    return false;
  }
  return true;
}

}  // namespace

EpisodeOutcome q_lfa_episode(LfaQRunState& rs, const TabularMdp& mdp) {
  EpisodeOutcome outcome;
  if (rs.diverged) return outcome;
  State i = sample_initial_state(mdp, rs.rng.environment);
  while (!mdp.is_terminal(i)) {
    if (outcome.length >= rs.episode_cap) throw EpisodeCapError();
    const Action u = choose(rs, mdp, i);
    const Transition t = sample_transition(mdp, i, u, rs.rng.environment);
    double target = t.cost;
    if (!mdp.is_terminal(t.next)) {
      const Vector next_values = linear_action_values(mdp, rs.features, rs.q, t.next);
      target += next_values(static_cast<Eigen::Index>(greedy_action(mdp, t.next, next_values, rs.objective)));
    }
    outcome.total += t.cost;
    ++outcome.length;
    if (!apply_update(rs, i, u, target)) break;
    i = t.next;
  }
  ++rs.episodes;
  return outcome;
}

EpisodeOutcome sarsa_lfa_episode(LfaQRunState& rs, const TabularMdp& mdp) {
  EpisodeOutcome outcome;
  if (rs.diverged) return outcome;
  State i = sample_initial_state(mdp, rs.rng.environment);
  if (!mdp.is_terminal(i)) {
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
      if (!apply_update(rs, i, u, t.cost + rs.features.dot(rs.q, t.next, next))) break;
      i = t.next;
      u = next;
    }
  }
  ++rs.episodes;
  return outcome;
}

ExpectedDynamics expected_dynamics(const TabularMdp& mdp, const StationaryPolicy& pi, const StateFeatures& phi) {
  const PolicyMatrices pm = policy_matrices(mdp, pi);
  const Vector h = mdp.reduce(occupancy(mdp, pi));
  const Matrix& features = phi.matrix();
  const Matrix identity = Matrix::Identity(pm.transition.rows(), pm.transition.cols());
  ExpectedDynamics out;
  out.a = features.transpose() * h.asDiagonal() * (pm.transition - identity) * features;
  out.b = features.transpose() * h.asDiagonal() * pm.cost;
  return out;
}

Vector fa_fixed_point(const ExpectedDynamics& dynamics) {
  Eigen::FullPivLU<Matrix> lu(dynamics.a);
  if (!lu.isInvertible()) throw ModelError("feature/occupancy degeneracy: A is singular");
  Vector v = lu.solve(-dynamics.b);
  if ((dynamics.a * v + dynamics.b).lpNorm<Eigen::Infinity>() > 1e-10 * std::max(1.0, v.lpNorm<Eigen::Infinity>()))
    throw ModelError("feature/occupancy degeneracy: A is ill-conditioned");
  return v;
}

double policy_objective(const TabularMdp& mdp, const LinearSoftmaxActor& actor) {
  return mdp.initial_distribution().dot(exact_policy_value(mdp, actor.policy()));
}

Vector exact_policy_gradient(const TabularMdp& mdp, const LinearSoftmaxActor& actor) {
  const StationaryPolicy pi = actor.policy();
  const Vector h = occupancy(mdp, pi);
  const QTable q = q_from_v(mdp, exact_policy_value(mdp, pi));
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(actor.dim()));
  for (State i : mdp.nonterminal_states())
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      const double w = pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u));
      if (w == 0.0) continue;
      grad += h(static_cast<Eigen::Index>(i)) * w * q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) *
              actor.log_gradient(i, u);
    }
  return grad;
}

Vector expected_actor_direction(const TabularMdp& mdp, const LinearSoftmaxActor& actor, const StateFeatures& phi,
                                const Vector& v) {
  const StationaryPolicy pi = actor.policy();
  const Vector h = occupancy(mdp, pi);
  Vector direction = Vector::Zero(static_cast<Eigen::Index>(actor.dim()));
  for (State i : mdp.nonterminal_states())
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      const double w = pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u));
      if (w == 0.0) continue;
      double td = mdp.expected_cost(i, u) - phi.dot(v, i);
      for (State j : mdp.nonterminal_states()) td += mdp.p(i, u, j) * phi.dot(v, j);
      direction += h(static_cast<Eigen::Index>(i)) * w * td * actor.log_gradient(i, u);
    }
  return direction;
}

double approximation_error(const TabularMdp& mdp, const LinearSoftmaxActor& actor, const StateFeatures& phi) {
  const Vector v = fa_fixed_point(expected_dynamics(mdp, actor.policy(), phi));
  return (expected_actor_direction(mdp, actor, phi, v) - exact_policy_gradient(mdp, actor)).norm();
}

}  // namespace ssp
