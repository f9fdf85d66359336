#pragma once

#include "ssp/mdp.hpp"

namespace ssp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// State features phi(i) for the critic. Rows are given for non-terminal states
/// (in nonterminal_states() order); phi(i0) is the zero vector.
class StateFeatures {
 public:
  StateFeatures(const TabularMdp& mdp, const Matrix& nonterminal_rows);

  std::size_t dim() const { return static_cast<std::size_t>(full_.cols()); }
  auto row(State i) const { return full_.row(static_cast<Eigen::Index>(i)); }
  double dot(const Vector& weights, State i) const { return row(i).dot(weights); }
  /// The |S^-| x d matrix Phi.
  const Matrix& matrix() const { return reduced_; }

  /// Throws ModelError unless the columns of Phi are linearly independent.
  void check_independent_columns(double threshold = 1e-10) const;

  static StateFeatures identity(const TabularMdp& mdp);

 private:
  Matrix reduced_;
  RowMatrix full_;
};

/// State-action features phi_1(i,u) for linear policies and linear Q-functions.
/// Rows are given per (non-terminal state, action), row index k*|A| + u with k
/// the reduced state index; the terminal state's features are zero.
class StateActionFeatures {
 public:
  StateActionFeatures(const TabularMdp& mdp, const Matrix& nonterminal_rows);

  std::size_t dim() const { return static_cast<std::size_t>(full_.cols()); }
  std::size_t num_actions() const { return num_actions_; }
  auto row(State i, Action u) const {
    return full_.row(static_cast<Eigen::Index>(i * num_actions_ + u));
  }
  double dot(const Vector& weights, State i, Action u) const { return row(i, u).dot(weights); }
  /// The (|S^-| |A|) x d matrix of non-terminal rows.
  const Matrix& matrix() const { return reduced_; }

  /// Throws ModelError unless the rows over feasible pairs span d dimensions.
  void check_independent_columns(const TabularMdp& mdp, double threshold = 1e-10) const;

  /// Indicator features over every (non-terminal state, action) pair, so that
  /// q^T phi_1(i,u) is exactly the table entry Q(i,u).
  static StateActionFeatures one_hot(const TabularMdp& mdp);
  /// Position of (i,u) in the one-hot coordinate system.
  static std::size_t one_hot_index(const TabularMdp& mdp, State i, Action u);

 private:
  std::size_t num_actions_;
  Matrix reduced_;
  RowMatrix full_;
};

}  // namespace ssp
