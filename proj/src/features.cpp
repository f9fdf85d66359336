#include "ssp/features.hpp"

#include <Eigen/SVD>

namespace ssp {

namespace {

bool full_column_rank(const Matrix& m, double threshold) {
  if (m.cols() == 0 || m.rows() < m.cols()) return false;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().minCoeff() > threshold;
}

}  // namespace

StateFeatures::StateFeatures(const TabularMdp& mdp, const Matrix& nonterminal_rows)
    : reduced_(nonterminal_rows),
      full_(RowMatrix::Zero(static_cast<Eigen::Index>(mdp.num_states()), nonterminal_rows.cols())) {
  if (nonterminal_rows.rows() != static_cast<Eigen::Index>(mdp.num_nonterminal()))
    throw ModelError("state feature matrix needs one row per non-terminal state");
  if (!nonterminal_rows.allFinite()) throw ModelError("state features must be finite");
  const auto& states = mdp.nonterminal_states();
  for (std::size_t k = 0; k < states.size(); ++k)
    full_.row(static_cast<Eigen::Index>(states[k])) = nonterminal_rows.row(static_cast<Eigen::Index>(k));
}

void StateFeatures::check_independent_columns(double threshold) const {
  if (!full_column_rank(reduced_, threshold))
    throw ModelError("state feature columns are not linearly independent");
}

StateFeatures StateFeatures::identity(const TabularMdp& mdp) {
  const auto n = static_cast<Eigen::Index>(mdp.num_nonterminal());
  return StateFeatures(mdp, Matrix::Identity(n, n));
}

StateActionFeatures::StateActionFeatures(const TabularMdp& mdp, const Matrix& nonterminal_rows)
    : num_actions_(mdp.num_actions()),
      reduced_(nonterminal_rows),
      full_(RowMatrix::Zero(static_cast<Eigen::Index>(mdp.num_states() * mdp.num_actions()),
                            nonterminal_rows.cols())) {
  const auto expected = static_cast<Eigen::Index>(mdp.num_nonterminal() * mdp.num_actions());
  if (nonterminal_rows.rows() != expected)
    throw ModelError("state-action feature matrix needs one row per non-terminal (state, action)");
  if (!nonterminal_rows.allFinite()) throw ModelError("state-action features must be finite");
  const auto& states = mdp.nonterminal_states();
  for (std::size_t k = 0; k < states.size(); ++k)
    for (Action u = 0; u < num_actions_; ++u)
      full_.row(static_cast<Eigen::Index>(states[k] * num_actions_ + u)) =
          nonterminal_rows.row(static_cast<Eigen::Index>(k * num_actions_ + u));
}

void StateActionFeatures::check_independent_columns(const TabularMdp& mdp, double threshold) const {
  std::vector<Eigen::Index> rows;
  for (State i : mdp.nonterminal_states())
    for (Action u = 0; u < num_actions_; ++u)
      if (mdp.feasible(i, u)) rows.push_back(static_cast<Eigen::Index>(i * num_actions_ + u));
  Matrix m(static_cast<Eigen::Index>(rows.size()), full_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = full_.row(rows[r]);
  if (!full_column_rank(m, threshold))
    throw ModelError("state-action feature columns are not linearly independent");
}

std::size_t StateActionFeatures::one_hot_index(const TabularMdp& mdp, State i, Action u) {
  return mdp.reduced_index(i) * mdp.num_actions() + u;
}

StateActionFeatures StateActionFeatures::one_hot(const TabularMdp& mdp) {
  const auto n = static_cast<Eigen::Index>(mdp.num_nonterminal() * mdp.num_actions());
  return StateActionFeatures(mdp, Matrix::Identity(n, n));
}

}  // namespace ssp
