#pragma once

#include <cstddef>

#include "ssp/mdp.hpp"

namespace ssp {

/// Model-based quantities for a fixed stationary policy, over non-terminal
/// states in nonterminal_states() order.
struct PolicyMatrices {
  Matrix transition;  // P_pi(i,j) = sum_u pi(i,u) p(i,u,j), j non-terminal
  Vector cost;        // R_pi(i) = sum_u pi(i,u) sum_j p(i,u,j) g(i,u,j)
};

/// Raised when a policy-dependent linear system is singular, which under a
/// valid SSP means the policy is improper.
class ImproperPolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ModelError unless pi has the MDP's shape, rows on the simplex
/// (within 1e-12) and no mass on infeasible actions.
void validate_policy(const TabularMdp& mdp, const StationaryPolicy& pi);

/// Uniform distribution over the feasible actions of each state.
StationaryPolicy uniform_policy(const TabularMdp& mdp);

PolicyMatrices policy_matrices(const TabularMdp& mdp, const StationaryPolicy& pi);

/// V^pi = (I - P_pi)^{-1} R_pi by dense LU. Throws ImproperPolicyError when
/// the system is singular.
ValueTable exact_policy_value(const TabularMdp& mdp, const StationaryPolicy& pi);

/// (T_pi V)(i).
ValueTable bellman_policy(const TabularMdp& mdp, const ValueTable& v, const StationaryPolicy& pi);
/// (T V)(i) with min or max over feasible actions.
ValueTable bellman_optimal(const TabularMdp& mdp, const ValueTable& v, Objective objective);
/// Deterministic greedy policy with respect to V; ties go to the lowest action index.
StationaryPolicy greedy_policy(const TabularMdp& mdp, const ValueTable& v, Objective objective);

struct ValueIterationResult {
  ValueTable value;
  StationaryPolicy greedy;
  std::size_t sweeps = 0;
};

/// Iterates T from V = 0 until the sup-norm change drops below tol.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, Objective objective,
                                     std::size_t max_sweeps = 1'000'000);

/// Q(i,u) = sum_j p(i,u,j) g(i,u,j) + sum_{j non-terminal} p(i,u,j) V(j).
/// Infeasible entries are 0.
QTable q_from_v(const TabularMdp& mdp, const ValueTable& v);

/// Worst-case expected hitting times xi of the terminal state, i.e. the value of
/// the unit-cost maximization problem, and beta = max_i (xi(i)-1)/xi(i). T is a
/// beta-contraction in the xi-weighted sup-norm.
struct AuxiliaryCertificate {
  Vector xi;  // full length, xi(i0) = 0
  double beta = 0.0;
};

AuxiliaryCertificate auxiliary_certificate(const TabularMdp& mdp, double tol = 1e-12);

/// max_i |V(i)| / xi(i) over non-terminal states.
double weighted_sup_norm(const TabularMdp& mdp, const Vector& v, const Vector& xi);

/// max_i P(X_{|S^-|} != i0 | X_0 = i, pi). A value below 1 certifies that pi
/// reaches the terminal state with positive probability within |S^-| steps.
double properness_probe(const TabularMdp& mdp, const StationaryPolicy& pi);

/// Expected visits per state before absorption, h^T = h0^T (I - P_pi)^{-1}.
/// Full length with the terminal entry 0.
Vector occupancy(const TabularMdp& mdp, const StationaryPolicy& pi);

/// Spectral radius of P_pi estimated by power iteration.
double spectral_radius(const Matrix& m, std::size_t iterations = 10'000);

}  // namespace ssp
