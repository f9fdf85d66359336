#include "ssp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ssp {

const char* to_string(Objective objective) {
  return objective == Objective::kMinimize ? "min" : "max";
}

Objective parse_objective(const std::string& text) {
  if (text == "min") return Objective::kMinimize;
  if (text == "max") return Objective::kMaximize;
  throw std::invalid_argument("unknown objective '" + text + "' (expected min or max)");
}

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions, State terminal)
    : num_states_(num_states),
      num_actions_(num_actions),
      terminal_(terminal),
      prob_(num_states * num_actions * num_states, 0.0),
      cost_(num_states * num_actions * num_states, 0.0),
      feasible_(num_states * num_actions, 0),
      initial_(Vector::Zero(static_cast<Eigen::Index>(num_states))) {
  if (num_states < 2) throw ModelError("an SSP needs at least one non-terminal state");
  if (num_actions == 0) throw ModelError("an SSP needs at least one action");
  if (terminal >= num_states) throw ModelError("terminal index out of range");
  for (State i = 0; i < num_states; ++i)
    if (i != terminal) nonterminal_.push_back(i);
}

void TabularMdp::set_transition(State i, Action u, State j, double probability, double cost) {
  if (i >= num_states_ || u >= num_actions_ || j >= num_states_)
    throw ModelError("set_transition: index out of range");
  prob_[offset(i, u) + j] = probability;
  cost_[offset(i, u) + j] = probability == 0.0 ? 0.0 : cost;
  refresh_feasibility(i, u);
}

void TabularMdp::make_terminal_absorbing() {
  for (Action u = 0; u < num_actions_; ++u) {
    for (State j = 0; j < num_states_; ++j) set_transition(terminal_, u, j, 0.0, 0.0);
    set_transition(terminal_, u, terminal_, 1.0, 0.0);
  }
}

void TabularMdp::refresh_feasibility(State i, Action u) {
  auto row = transition_row(i, u);
  feasible_[i * num_actions_ + u] =
      std::any_of(row.begin(), row.end(), [](double x) { return x != 0.0; }) ? 1 : 0;
}

void TabularMdp::set_initial_distribution(Vector h0) {
  if (h0.size() != static_cast<Eigen::Index>(num_states_))
    throw ModelError("initial distribution has wrong length");
  initial_ = std::move(h0);
}

std::size_t TabularMdp::num_feasible(State i) const {
  std::size_t n = 0;
  for (Action u = 0; u < num_actions_; ++u) n += feasible(i, u) ? 1 : 0;
  return n;
}

std::vector<Action> TabularMdp::feasible_actions(State i) const {
  std::vector<Action> actions;
  for (Action u = 0; u < num_actions_; ++u)
    if (feasible(i, u)) actions.push_back(u);
  return actions;
}

std::size_t TabularMdp::reduced_index(State i) const {
  if (i == terminal_) throw ModelError("terminal state has no reduced index");
  return i < terminal_ ? i : i - 1;
}

double TabularMdp::expected_cost(State i, Action u) const {
  const auto pr = transition_row(i, u);
  const auto gr = cost_row(i, u);
  double c = 0.0;
  for (State j = 0; j < num_states_; ++j) c += pr[j] * gr[j];
  return c;
}

Vector TabularMdp::reduce(const Vector& full) const {
  Vector out(static_cast<Eigen::Index>(nonterminal_.size()));
  for (std::size_t k = 0; k < nonterminal_.size(); ++k) out(k) = full(nonterminal_[k]);
  return out;
}

Vector TabularMdp::expand(const Vector& reduced) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(num_states_));
  for (std::size_t k = 0; k < nonterminal_.size(); ++k) out(nonterminal_[k]) = reduced(k);
  return out;
}

bool operator==(const TabularMdp& a, const TabularMdp& b) {
  return a.num_states_ == b.num_states_ && a.num_actions_ == b.num_actions_ &&
         a.terminal_ == b.terminal_ && a.prob_ == b.prob_ && a.cost_ == b.cost_ &&
         a.initial_ == b.initial_;
}

void validate(const TabularMdp& mdp) {
  constexpr double kTol = 1e-12;
  const State t = mdp.terminal();
  auto where = [](State i, Action u) {
    std::ostringstream s;
    s << " at (i=" << i << ", u=" << u << ")";
    return s.str();
  };
  for (Action u = 0; u < mdp.num_actions(); ++u) {
    if (mdp.p(t, u, t) != 1.0) throw ModelError("terminal not absorbing" + where(t, u));
    if (mdp.g(t, u, t) != 0.0) throw ModelError("terminal cost nonzero" + where(t, u));
  }
  for (State i = 0; i < mdp.num_states(); ++i) {
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      const auto row = mdp.transition_row(i, u);
      const auto costs = mdp.cost_row(i, u);
      double sum = 0.0;
      for (State j = 0; j < mdp.num_states(); ++j) {
        if (!(row[j] >= 0.0 && row[j] <= 1.0))
          throw ModelError("transition probability outside [0,1]" + where(i, u));
        if (!std::isfinite(costs[j])) throw ModelError("cost not finite" + where(i, u));
        sum += row[j];
      }
      if (!mdp.feasible(i, u)) continue;
      if (std::abs(sum - 1.0) > kTol) throw ModelError("row not stochastic" + where(i, u));
    }
    if (i != t && mdp.num_feasible(i) == 0) {
      std::ostringstream s;
      s << "no feasible action in state " << i;
      throw ModelError(s.str());
    }
  }
  const Vector& h0 = mdp.initial_distribution();
  if ((h0.array() < 0.0).any()) throw ModelError("initial distribution has a negative entry");
  if (h0(t) != 0.0) throw ModelError("initial distribution puts mass on the terminal state");
  if (std::abs(h0.sum() - 1.0) > kTol) throw ModelError("initial distribution does not sum to 1");
}

Transition sample_transition(const TabularMdp& mdp, State i, Action u, RandomStream& rng) {
  if (mdp.is_terminal(i)) throw ModelError("cannot sample a transition from the terminal state");
  if (!mdp.feasible(i, u)) throw ModelError("action is infeasible in this state");
  const State j = rng.categorical(mdp.transition_row(i, u));
  return {j, mdp.g(i, u, j)};
}

State sample_initial_state(const TabularMdp& mdp, RandomStream& rng) {
  const Vector& h0 = mdp.initial_distribution();
  return rng.categorical(std::span<const double>(h0.data(), static_cast<std::size_t>(h0.size())));
}

}  // namespace ssp
