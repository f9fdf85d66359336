#include "ssp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace ssp {

namespace {

constexpr double kSimplexTol = 1e-12;

double action_value(const TabularMdp& mdp, State i, Action u, const ValueTable& v) {
  const auto pr = mdp.transition_row(i, u);
  const auto gr = mdp.cost_row(i, u);
  double q = 0.0;
  for (State j = 0; j < mdp.num_states(); ++j) {
    if (pr[j] == 0.0) continue;
    q += pr[j] * gr[j];
    if (!mdp.is_terminal(j)) q += pr[j] * v(static_cast<Eigen::Index>(j));
  }
  return q;
}

bool better(double candidate, double incumbent, Objective objective) {
  return objective == Objective::kMinimize ? candidate < incumbent : candidate > incumbent;
}

void check_value_shape(const TabularMdp& mdp, const Vector& v) {
  if (v.size() != static_cast<Eigen::Index>(mdp.num_states()))
    throw ModelError("value table has wrong length");
}

Vector solve_nonsingular(const Matrix& a, const Vector& b, const char* context) {
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw ImproperPolicyError(std::string(context) + ": policy appears improper");
  Vector x = lu.solve(b);
  if (!x.allFinite()) throw ImproperPolicyError(std::string(context) + ": policy appears improper");
  return x;
}

}  // namespace

void validate_policy(const TabularMdp& mdp, const StationaryPolicy& pi) {
  if (pi.rows() != static_cast<Eigen::Index>(mdp.num_states()) ||
      pi.cols() != static_cast<Eigen::Index>(mdp.num_actions()))
    throw ModelError("policy has wrong shape");
  for (State i : mdp.nonterminal_states()) {
    double sum = 0.0;
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      const double w = pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u));
      if (!(w >= 0.0 && w <= 1.0)) throw ModelError("policy probability outside [0,1]");
      if (w > 0.0 && !mdp.feasible(i, u)) throw ModelError("policy uses an infeasible action");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
      std::ostringstream s;
      s << "policy row for state " << i << " does not sum to 1";
      throw ModelError(s.str());
    }
  }
}

StationaryPolicy uniform_policy(const TabularMdp& mdp) {
  StationaryPolicy pi = StationaryPolicy::Zero(static_cast<Eigen::Index>(mdp.num_states()),
                                               static_cast<Eigen::Index>(mdp.num_actions()));
  for (State i : mdp.nonterminal_states()) {
    const double w = 1.0 / static_cast<double>(mdp.num_feasible(i));
    for (Action u : mdp.feasible_actions(i))
      pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) = w;
  }
  return pi;
}

PolicyMatrices policy_matrices(const TabularMdp& mdp, const StationaryPolicy& pi) {
  validate_policy(mdp, pi);
  const auto n = static_cast<Eigen::Index>(mdp.num_nonterminal());
  PolicyMatrices out{Matrix::Zero(n, n), Vector::Zero(n)};
  const auto& states = mdp.nonterminal_states();
  for (Eigen::Index r = 0; r < n; ++r) {
    const State i = states[static_cast<std::size_t>(r)];
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      const double w = pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u));
      if (w == 0.0) continue;
      out.cost(r) += w * mdp.expected_cost(i, u);
      for (Eigen::Index c = 0; c < n; ++c)
        out.transition(r, c) += w * mdp.p(i, u, states[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

ValueTable exact_policy_value(const TabularMdp& mdp, const StationaryPolicy& pi) {
  const PolicyMatrices pm = policy_matrices(mdp, pi);
  const Matrix system = Matrix::Identity(pm.transition.rows(), pm.transition.cols()) - pm.transition;
  const Vector v = solve_nonsingular(system, pm.cost, "exact_policy_value");
  const double residual = (system * v - pm.cost).lpNorm<Eigen::Infinity>();
  if (residual > 1e-10 * std::max(1.0, v.lpNorm<Eigen::Infinity>()))
    throw ImproperPolicyError("exact_policy_value: ill-conditioned system, policy appears improper");
  return mdp.expand(v);
}

ValueTable bellman_policy(const TabularMdp& mdp, const ValueTable& v, const StationaryPolicy& pi) {
  check_value_shape(mdp, v);
  ValueTable out = ValueTable::Zero(v.size());
  for (State i : mdp.nonterminal_states()) {
    double total = 0.0;
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      const double w = pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u));
      if (w != 0.0) total += w * action_value(mdp, i, u, v);
    }
    out(static_cast<Eigen::Index>(i)) = total;
  }
  return out;
}

ValueTable bellman_optimal(const TabularMdp& mdp, const ValueTable& v, Objective objective) {
  check_value_shape(mdp, v);
  ValueTable out = ValueTable::Zero(v.size());
  for (State i : mdp.nonterminal_states()) {
    bool first = true;
    double best = 0.0;
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      if (!mdp.feasible(i, u)) continue;
      const double q = action_value(mdp, i, u, v);
      if (first || better(q, best, objective)) best = q;
      first = false;
    }
    out(static_cast<Eigen::Index>(i)) = best;
  }
  return out;
}

StationaryPolicy greedy_policy(const TabularMdp& mdp, const ValueTable& v, Objective objective) {
  check_value_shape(mdp, v);
  StationaryPolicy pi = StationaryPolicy::Zero(static_cast<Eigen::Index>(mdp.num_states()),
                                               static_cast<Eigen::Index>(mdp.num_actions()));
  for (State i : mdp.nonterminal_states()) {
    Action arg = mdp.num_actions();
    double best = 0.0;
    for (Action u = 0; u < mdp.num_actions(); ++u) {
      if (!mdp.feasible(i, u)) continue;
      const double q = action_value(mdp, i, u, v);
      if (arg == mdp.num_actions() || better(q, best, objective)) {
        best = q;
        arg = u;
      }
    }
    pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(arg)) = 1.0;
  }
  return pi;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, Objective objective,
                                     std::size_t max_sweeps) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  ValueTable v = ValueTable::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    ValueTable next = bellman_optimal(mdp, v, objective);
    const double change = (next - v).lpNorm<Eigen::Infinity>();
    v = std::move(next);
    if (!v.allFinite()) throw std::runtime_error("value_iteration: values diverged");
    if (change < tol) return {v, greedy_policy(mdp, v, objective), sweep};
  }
  throw std::runtime_error("value_iteration: iteration cap exceeded");
}

QTable q_from_v(const TabularMdp& mdp, const ValueTable& v) {
  check_value_shape(mdp, v);
  QTable q = QTable::Zero(static_cast<Eigen::Index>(mdp.num_states()),
                          static_cast<Eigen::Index>(mdp.num_actions()));
  for (State i : mdp.nonterminal_states())
    for (Action u = 0; u < mdp.num_actions(); ++u)
      if (mdp.feasible(i, u))
        q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) = action_value(mdp, i, u, v);
  return q;
}

AuxiliaryCertificate auxiliary_certificate(const TabularMdp& mdp, double tol) {
  constexpr double kDivergence = 1e9;
  constexpr std::size_t kMaxSweeps = 10'000'000;
  // A non-empty set of states in which some action keeps every successor
  // inside the set lets a policy avoid i0 forever; value iteration would only
  // grow linearly there, so reject it up front.
  std::vector<char> trapped(mdp.num_states(), 0);
  for (State i : mdp.nonterminal_states()) trapped[i] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (State i : mdp.nonterminal_states()) {
      if (!trapped[i]) continue;
      bool keeps = false;
      for (Action u = 0; u < mdp.num_actions() && !keeps; ++u) {
        if (!mdp.feasible(i, u)) continue;
        keeps = true;
        for (State j = 0; j < mdp.num_states() && keeps; ++j)
          if (mdp.p(i, u, j) > 0.0 && !trapped[j]) keeps = false;
      }
      if (!keeps) {
        trapped[i] = 0;
        changed = true;
      }
    }
  }
  if (std::find(trapped.begin(), trapped.end(), 1) != trapped.end())
    throw ModelError("MDP appears to violate Assumption 1: some policy never terminates");
  Vector xi = Vector::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    Vector next = Vector::Zero(xi.size());
    for (State i : mdp.nonterminal_states()) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action u = 0; u < mdp.num_actions(); ++u) {
        if (!mdp.feasible(i, u)) continue;
        double total = 1.0;
        for (State j : mdp.nonterminal_states()) total += mdp.p(i, u, j) * xi(static_cast<Eigen::Index>(j));
        best = std::max(best, total);
      }
      next(static_cast<Eigen::Index>(i)) = best;
    }
    const double change = (next - xi).lpNorm<Eigen::Infinity>();
    xi = std::move(next);
    if (xi.maxCoeff() > kDivergence)
      throw ModelError("MDP appears to violate Assumption 1: some policy never terminates");
    if (change < tol) break;
    if (sweep + 1 == kMaxSweeps) throw ModelError("MDP appears to violate Assumption 1: certificate did not converge");
  }
  double beta = 0.0;
  for (State i : mdp.nonterminal_states()) {
    const double x = xi(static_cast<Eigen::Index>(i));
    beta = std::max(beta, (x - 1.0) / x);
  }
  return {xi, beta};
}

double weighted_sup_norm(const TabularMdp& mdp, const Vector& v, const Vector& xi) {
  double norm = 0.0;
  for (State i : mdp.nonterminal_states())
    norm = std::max(norm, std::abs(v(static_cast<Eigen::Index>(i))) / xi(static_cast<Eigen::Index>(i)));
  return norm;
}

double properness_probe(const TabularMdp& mdp, const StationaryPolicy& pi) {
  const PolicyMatrices pm = policy_matrices(mdp, pi);
  // survival(i) = P(X_k != i0 | X_0 = i) after k steps.
  Vector survival = Vector::Ones(pm.transition.rows());
  for (std::size_t k = 0; k < mdp.num_nonterminal(); ++k) survival = pm.transition * survival;
  return survival.maxCoeff();
}

Vector occupancy(const TabularMdp& mdp, const StationaryPolicy& pi) {
  const PolicyMatrices pm = policy_matrices(mdp, pi);
  const Matrix system = (Matrix::Identity(pm.transition.rows(), pm.transition.cols()) - pm.transition).transpose();
  return mdp.expand(solve_nonsingular(system, mdp.reduce(mdp.initial_distribution()), "occupancy"));
}

double spectral_radius(const Matrix& m, std::size_t iterations) {
  if (m.rows() == 0) return 0.0;
  Vector x = Vector::Ones(m.rows());
  const std::size_t half = iterations / 2;
  double log_growth_tail = 0.0;
  for (std::size_t k = 0; k < iterations; ++k) {
    x = m * x;
    const double norm = x.lpNorm<Eigen::Infinity>();
    if (norm == 0.0) return 0.0;
    x /= norm;
    if (k >= half) log_growth_tail += std::log(norm);
  }
  return std::exp(log_growth_tail / static_cast<double>(iterations - half));
}

}  // namespace ssp
