#include "ssp/policies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssp {

Vector masked_softmax(const TabularMdp& mdp, State i, const Vector& logits) {
  const auto n = static_cast<Eigen::Index>(mdp.num_actions());
  Vector probs = Vector::Zero(n);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index u = 0; u < n; ++u)
    if (mdp.feasible(i, static_cast<Action>(u))) top = std::max(top, logits(u));
  double total = 0.0;
  for (Eigen::Index u = 0; u < n; ++u) {
    if (!mdp.feasible(i, static_cast<Action>(u))) continue;
    probs(u) = std::exp(logits(u) - top);
    total += probs(u);
  }
  return probs / total;
}

SoftmaxActor::SoftmaxActor(const TabularMdp& mdp, double radius)
    : mdp_(&mdp),
      theta_(Matrix::Zero(static_cast<Eigen::Index>(mdp.num_states()), static_cast<Eigen::Index>(mdp.num_actions()))),
      radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("actor box radius must be positive");
}

Vector SoftmaxActor::probabilities(State i) const {
  if (mdp_->is_terminal(i)) throw std::invalid_argument("no policy at the terminal state");
  return masked_softmax(*mdp_, i, theta_.row(static_cast<Eigen::Index>(i)).transpose());
}

StationaryPolicy SoftmaxActor::policy() const {
  StationaryPolicy pi = StationaryPolicy::Zero(theta_.rows(), theta_.cols());
  for (State i : mdp_->nonterminal_states()) pi.row(static_cast<Eigen::Index>(i)) = probabilities(i).transpose();
  return pi;
}

void SoftmaxActor::set(State i, Action u, double value) {
  theta_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) = project_box(value, radius_);
}

LinearSoftmaxActor::LinearSoftmaxActor(const TabularMdp& mdp, StateActionFeatures features, double radius,
                                       double epsilon)
    : mdp_(&mdp),
      features_(std::move(features)),
      theta_(Vector::Zero(static_cast<Eigen::Index>(features_.dim()))),
      radius_(radius),
      epsilon_(epsilon) {
  if (!(radius > 0.0)) throw std::invalid_argument("actor box radius must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("policy epsilon must lie in [0,1]");
  if (features_.num_actions() != mdp.num_actions()) throw ModelError("feature map does not match the MDP");
}

Vector LinearSoftmaxActor::logits(State i) const {
  Vector z(static_cast<Eigen::Index>(mdp_->num_actions()));
  for (Action u = 0; u < mdp_->num_actions(); ++u) z(static_cast<Eigen::Index>(u)) = features_.dot(theta_, i, u);
  return z;
}

Vector LinearSoftmaxActor::probabilities(State i) const {
  if (mdp_->is_terminal(i)) throw std::invalid_argument("no policy at the terminal state");
  Vector probs = masked_softmax(*mdp_, i, logits(i));
  if (epsilon_ > 0.0) {
    const double uniform = epsilon_ / static_cast<double>(mdp_->num_feasible(i));
    for (Action u = 0; u < mdp_->num_actions(); ++u)
      if (mdp_->feasible(i, u))
        probs(static_cast<Eigen::Index>(u)) = uniform + (1.0 - epsilon_) * probs(static_cast<Eigen::Index>(u));
  }
  return probs;
}

StationaryPolicy LinearSoftmaxActor::policy() const {
  StationaryPolicy pi = StationaryPolicy::Zero(static_cast<Eigen::Index>(mdp_->num_states()),
                                               static_cast<Eigen::Index>(mdp_->num_actions()));
  for (State i : mdp_->nonterminal_states()) pi.row(static_cast<Eigen::Index>(i)) = probabilities(i).transpose();
  return pi;
}

Vector LinearSoftmaxActor::log_gradient(State i, Action u) const {
  if (!mdp_->feasible(i, u)) throw std::invalid_argument("log_gradient: infeasible action");
  const Vector soft = masked_softmax(*mdp_, i, logits(i));
  Vector mean = Vector::Zero(theta_.size());
  for (Action w = 0; w < mdp_->num_actions(); ++w)
    if (soft(static_cast<Eigen::Index>(w)) > 0.0)
      mean += soft(static_cast<Eigen::Index>(w)) * features_.row(i, w).transpose();
  Vector psi = features_.row(i, u).transpose() - mean;
  if (epsilon_ > 0.0) {
    const double s = soft(static_cast<Eigen::Index>(u));
    const double pi = epsilon_ / static_cast<double>(mdp_->num_feasible(i)) + (1.0 - epsilon_) * s;
    psi *= (1.0 - epsilon_) * s / pi;
  }
  return psi;
}

void LinearSoftmaxActor::set_parameters(const Vector& value) {
  if (value.size() != theta_.size()) throw std::invalid_argument("actor parameter has wrong dimension");
  theta_ = value;
  project_box(theta_, radius_);
}

const char* to_string(ExplorationKind kind) {
  switch (kind) {
    case ExplorationKind::kEpsGreedyGlie: return "eps-greedy-glie";
    case ExplorationKind::kSoftmaxGlie: return "softmax-glie";
    case ExplorationKind::kConstantEps: return "constant-eps";
    case ExplorationKind::kEpsSoftmax: return "eps-softmax";
  }
  return "?";
}

ExplorationKind parse_exploration_kind(const std::string& text) {
  for (auto k : {ExplorationKind::kEpsGreedyGlie, ExplorationKind::kSoftmaxGlie, ExplorationKind::kConstantEps,
                 ExplorationKind::kEpsSoftmax})
    if (text == to_string(k)) return k;
  throw std::invalid_argument("unknown exploration kind '" + text + "'");
}

ExplorationParams ExplorationSchedule::params(std::uint64_t visit_count) const {
  const double n = static_cast<double>(visit_count);
  switch (kind) {
    case ExplorationKind::kEpsGreedyGlie: return {std::min(1.0, c / (n + 1.0)), 0.0};
    case ExplorationKind::kSoftmaxGlie: return {0.0, temperature_c / std::log(n + 2.0)};
    case ExplorationKind::kConstantEps: return {epsilon, 0.0};
    case ExplorationKind::kEpsSoftmax: return {epsilon, temperature};
  }
  return {};
}

Action greedy_action(const TabularMdp& mdp, State i, const Vector& action_values, Objective objective) {
  Action best = mdp.num_actions();
  for (Action u = 0; u < mdp.num_actions(); ++u) {
    if (!mdp.feasible(i, u)) continue;
    const double q = action_values(static_cast<Eigen::Index>(u));
    if (best == mdp.num_actions()) {
      best = u;
      continue;
    }
    const double incumbent = action_values(static_cast<Eigen::Index>(best));
    if (objective == Objective::kMinimize ? q < incumbent : q > incumbent) best = u;
  }
  return best;
}

Vector behavior_distribution(const TabularMdp& mdp, State i, const Vector& action_values,
                             const ExplorationSchedule& schedule, std::uint64_t visit_count,
                             Objective objective) {
  const ExplorationParams params = schedule.params(visit_count);
  Vector exploit;
  if (params.temperature > 0.0) {
    const double sign = objective == Objective::kMinimize ? -1.0 : 1.0;
    exploit = masked_softmax(mdp, i, (sign / params.temperature) * action_values);
  } else {
    exploit = Vector::Zero(static_cast<Eigen::Index>(mdp.num_actions()));
    exploit(static_cast<Eigen::Index>(greedy_action(mdp, i, action_values, objective))) = 1.0;
  }
  if (params.epsilon <= 0.0) return exploit;
  const double uniform = params.epsilon / static_cast<double>(mdp.num_feasible(i));
  Vector probs = Vector::Zero(exploit.size());
  for (Action u = 0; u < mdp.num_actions(); ++u)
    if (mdp.feasible(i, u))
      probs(static_cast<Eigen::Index>(u)) = uniform + (1.0 - params.epsilon) * exploit(static_cast<Eigen::Index>(u));
  return probs;
}

}  // namespace ssp
