#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ssp/envs.hpp"
#include "ssp/linear_fa.hpp"
#include "ssp/solvers.hpp"
#include "ssp/tabular.hpp"
#include "test_support.hpp"

namespace {

using ssp::ExplorationKind;
using ssp::ExplorationSchedule;
using ssp::LinearSoftmaxActor;
using ssp::Matrix;
using ssp::Objective;
using ssp::ScheduleFamily;
using ssp::StateActionFeatures;
using ssp::StateFeatures;
using ssp::StepSchedule;
using ssp::Vector;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, ssp::RandomStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = 2.0 * rng.uniform() - 1.0;
  return m;
}

Vector random_vector(Eigen::Index n, ssp::RandomStream& rng, double scale) {
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

double max_symmetric_eigenvalue(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().maxCoeff();
}

ssp::FaRunState fa_state(const ssp::FeaturedMdp& f, std::uint64_t seed, double eps = 0.0) {
  return ssp::FaRunState(f.state_features, LinearSoftmaxActor(f.mdp, f.action_features, 20.0, eps),
                         StepSchedule(ScheduleFamily::kAcFast), StepSchedule(ScheduleFamily::kAcSlow),
                         Objective::kMinimize, seed);
}

TEST(ExpectedDynamics, ChatterUniform) {
  const auto f = ssp::sarsa_chatter_mdp();
  const auto dyn = ssp::expected_dynamics(f.mdp, ssp::uniform_policy(f.mdp), f.state_features);
  EXPECT_LT((dyn.a - Matrix{{-1.0, 1.0}, {0.0, -1.0}}).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((dyn.b - Vector{{0.0, -1.5}}).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix sym = 0.5 * (dyn.a + dyn.a.transpose());
  Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues();
  EXPECT_NEAR(eig(0), -1.5, 1e-12);
  EXPECT_NEAR(eig(1), -0.5, 1e-12);
  const Vector v = ssp::fa_fixed_point(dyn);
  EXPECT_LT((v - Vector{{-1.5, -1.5}}).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExpectedDynamics, ZeroCostsGiveZeroB) {
  const auto mdp = ssp::testing::zero_cost_mdp();
  const auto phi = StateFeatures::identity(mdp);
  ssp::RandomStream rng(1);
  const auto dyn = ssp::expected_dynamics(mdp, ssp::testing::random_policy(mdp, rng), phi);
  EXPECT_TRUE(dyn.b.isZero(0.0));
  EXPECT_TRUE(ssp::fa_fixed_point(dyn).isZero(0.0));
}

TEST(ExpectedDynamics, MatchesOccupancyDefinition) {
  // A = Phi^T H (P - I) Phi assembled entry by entry.
  const auto mdp = ssp::random_mdp(6, 3, 5);
  ssp::RandomStream rng(2);
  const StateFeatures phi(mdp, random_matrix(5, 2, rng));
  const auto pi = ssp::testing::random_policy(mdp, rng);
  const auto dyn = ssp::expected_dynamics(mdp, pi, phi);
  const Vector h = ssp::occupancy(mdp, pi);
  Matrix a = Matrix::Zero(2, 2);
  Vector b = Vector::Zero(2);
  for (ssp::State i : mdp.nonterminal_states())
    for (ssp::Action u = 0; u < 3; ++u)
      for (ssp::State j = 0; j < mdp.num_states(); ++j) {
        const double w = h(i) * pi(i, u) * mdp.p(i, u, j);
        a += w * phi.row(i).transpose() * (phi.row(j) - phi.row(i));
        b += w * mdp.g(i, u, j) * phi.row(i).transpose();
      }
  EXPECT_LT((dyn.a - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((dyn.b - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExpectedDynamics, NegativeDefiniteOnShippedEnvironments) {
  ssp::RandomStream rng(3);
  const auto f4 = ssp::qlfa_counterexample();
  const auto f5 = ssp::sarsa_chatter_mdp();
  const auto random = ssp::random_mdp(20, 4, 0);
  const auto grid = ssp::frozen_lake(ssp::GridSpec::standard_4x4()).mdp;
  const std::vector<std::pair<const ssp::TabularMdp*, StateFeatures>> cases{
      {&f4.mdp, f4.state_features},
      {&f5.mdp, f5.state_features},
      {&random, StateFeatures::identity(random)},
      {&random, StateFeatures(random, random_matrix(19, 5, rng))},
      {&grid, StateFeatures::identity(grid)}};
  for (const auto& [mdp, phi] : cases)
    for (int k = 0; k < 20; ++k) {
      const auto dyn = ssp::expected_dynamics(*mdp, ssp::testing::random_policy(*mdp, rng), phi);
      ASSERT_LT(max_symmetric_eigenvalue(dyn.a), 0.0);
    }
}

TEST(FixedPoint, SingularIsReported) {
  ssp::ExpectedDynamics dyn{Matrix{{1.0, 2.0}, {2.0, 4.0}}, Vector{{1.0, 0.0}}};
  try {
    ssp::fa_fixed_point(dyn);
    FAIL() << "expected ModelError";
  } catch (const ssp::ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("feature/occupancy degeneracy"), std::string::npos);
  }
}

// Frozen-actor AC-FA critic against the expected-dynamics equilibrium.
void expect_critic_reaches_fixed_point(ssp::FaRunState rs, const ssp::TabularMdp& mdp, int episodes) {
  rs.freeze_actor = true;
  const Vector target = ssp::fa_fixed_point(ssp::expected_dynamics(mdp, rs.actor.policy(), rs.phi));
  for (int e = 0; e < episodes; ++e) ssp::ac_fa_episode(rs, mdp);
  EXPECT_LT((rs.v - target).cwiseAbs().maxCoeff(), 0.05) << "v " << rs.v.transpose() << " target "
                                                          << target.transpose();
}

TEST(FixedPoint, MonteCarloCriticOnDiagnostics) {
  auto rs4 = fa_state(ssp::qlfa_counterexample(), 1);
  rs4.v = Vector{{-2.0}};
  rs4.actor.set_parameters(Vector{{-2.0, -1.0}});
  expect_critic_reaches_fixed_point(rs4, ssp::qlfa_counterexample().mdp, 200'000);
  expect_critic_reaches_fixed_point(fa_state(ssp::sarsa_chatter_mdp(), 2), ssp::sarsa_chatter_mdp().mdp, 200'000);
}

TEST(FixedPoint, MonteCarloCriticOnRandomFeatures) {
  const auto mdp = ssp::random_mdp(7, 3, 9);
  ssp::RandomStream rng(4);
  const StateFeatures phi(mdp, random_matrix(6, 3, rng));
  ASSERT_NO_THROW(phi.check_independent_columns());
  LinearSoftmaxActor actor(mdp, StateActionFeatures(mdp, random_matrix(18, 4, rng)), 20.0);
  actor.set_parameters(random_vector(4, rng, 1.0));
  ssp::FaRunState rs(phi, actor, StepSchedule(ScheduleFamily::kAcFast), StepSchedule(ScheduleFamily::kAcSlow),
                     Objective::kMinimize, 5);
  expect_critic_reaches_fixed_point(rs, mdp, 200'000);
}

TEST(AcFa, ZeroCostKeepsZero) {
  const auto mdp = ssp::testing::zero_cost_mdp();
  ssp::FaRunState rs(StateFeatures::identity(mdp), LinearSoftmaxActor(mdp, StateActionFeatures::one_hot(mdp), 20.0),
                     StepSchedule(ScheduleFamily::kAcFast), StepSchedule(ScheduleFamily::kAcSlow),
                     Objective::kMinimize, 3);
  for (int e = 0; e < 2000; ++e) ssp::ac_fa_episode(rs, mdp);
  EXPECT_TRUE(rs.v.isZero(0.0));
  EXPECT_TRUE(rs.actor.parameters().isZero(0.0));
  EXPECT_EQ(rs.episodes, 2000u);
}

TEST(AcFa, BatchUsesEpisodeStartCritic) {
  // One chatter episode: d_0 = 0 + v.phi(i2 or i3) - v.phi(i1), d_1 = g - v.phi(i2 or i3).
  const auto f = ssp::sarsa_chatter_mdp();
  auto rs = fa_state(f, 8);
  rs.v = Vector{{0.5, -1.0}};
  rs.freeze_actor = true;
  const auto out = ssp::ac_fa_episode(rs, f.mdp);
  const double d0 = -1.0 - 0.5, d1 = out.total + 1.0;
  const double a = StepSchedule(ScheduleFamily::kAcFast)(0);
  EXPECT_NEAR(rs.v(0), 0.5 + a * d0, 1e-15);
  EXPECT_NEAR(rs.v(1), -1.0 + a * d1, 1e-15);
}

TEST(AcFa, ActorStaysInBox) {
  const auto f = ssp::sarsa_chatter_mdp();
  ssp::FaRunState rs(f.state_features, LinearSoftmaxActor(f.mdp, f.action_features, 1.0),
                     StepSchedule(ScheduleFamily::kAcFast), StepSchedule(ScheduleFamily::kAcSlow, 100.0),
                     Objective::kMinimize, 4);
  for (int e = 0; e < 1000; ++e) {
    ssp::ac_fa_episode(rs, f.mdp);
    ASSERT_LE(rs.actor.parameters().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(AcFa, CapRaises) {
  const auto grid = ssp::frozen_lake(ssp::GridSpec::parse("SF/FG", 0.0)).mdp;
  Matrix rows = Matrix::Zero(12, 4);
  for (Eigen::Index k = 0; k < 12; ++k) rows(k, k % 4) = 1.0;
  ssp::FaRunState rs(StateFeatures::identity(grid), LinearSoftmaxActor(grid, StateActionFeatures(grid, rows), 20.0),
                     StepSchedule(ScheduleFamily::kAcFast), StepSchedule(ScheduleFamily::kAcSlow),
                     Objective::kMaximize, 4);
  rs.actor.set_parameters(Vector{{20.0, -20.0, -20.0, -20.0}});
  rs.episode_cap = 100;
  EXPECT_THROW(ssp::ac_fa_episode(rs, grid), ssp::EpisodeCapError);
}

// Central differences of J(theta) = h0^T V^theta.
Vector numeric_objective_gradient(const ssp::TabularMdp& mdp, LinearSoftmaxActor actor, double h) {
  const Vector theta = actor.parameters();
  Vector g(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector plus = theta, minus = theta;
    plus(k) += h;
    minus(k) -= h;
    actor.set_parameters(plus);
    const double jp = ssp::policy_objective(mdp, actor);
    actor.set_parameters(minus);
    const double jm = ssp::policy_objective(mdp, actor);
    g(k) = (jp - jm) / (2.0 * h);
  }
  return g;
}

void expect_gradient_matches(const ssp::TabularMdp& mdp, const LinearSoftmaxActor& actor) {
  const Vector exact = ssp::exact_policy_gradient(mdp, actor);
  const Vector numeric = numeric_objective_gradient(mdp, actor, 1e-5);
  EXPECT_LE((exact - numeric).norm(), 1e-5 * std::max(1.0, numeric.norm()))
      << "exact " << exact.transpose() << " numeric " << numeric.transpose();
}

TEST(PolicyGradient, FiniteDifferencesOnChatter) {
  const auto f = ssp::sarsa_chatter_mdp();
  ssp::RandomStream rng(6);
  for (double eps : {0.0, 0.1}) {
    LinearSoftmaxActor actor(f.mdp, f.action_features, 20.0, eps);
    for (int k = 0; k < 5; ++k) {
      actor.set_parameters(random_vector(3, rng, 2.0));
      expect_gradient_matches(f.mdp, actor);
    }
  }
}

TEST(PolicyGradient, FiniteDifferencesOnRandomMdp) {
  const auto mdp = ssp::random_mdp(8, 3, 14);
  ssp::RandomStream rng(7);
  const StateActionFeatures phi1(mdp, random_matrix(21, 5, rng));
  for (double eps : {0.0, 0.2}) {
    LinearSoftmaxActor actor(mdp, phi1, 20.0, eps);
    for (int k = 0; k < 5; ++k) {
      actor.set_parameters(random_vector(5, rng, 2.0));
      expect_gradient_matches(mdp, actor);
    }
  }
}

TEST(PolicyGradient, ChatterUniformValue) {
  // dJ/dtheta_1 = pi(u0) pi(u1) (Q(u0) - Q(u1)) = 0.25 * (-1).
  const auto f = ssp::sarsa_chatter_mdp();
  LinearSoftmaxActor actor(f.mdp, f.action_features, 20.0);
  const Vector g = ssp::exact_policy_gradient(f.mdp, actor);
  EXPECT_LT((g - Vector{{-0.25, 0.25, 0.0}}).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(ssp::policy_objective(f.mdp, actor), -1.5, 1e-15);
}

TEST(PolicyGradient, SaturatedSoftmaxIsFlat) {
  const auto f = ssp::sarsa_chatter_mdp();
  LinearSoftmaxActor actor(f.mdp, f.action_features, 20.0);
  actor.set_parameters(Vector{{20.0, -20.0, 0.0}});
  EXPECT_LT(ssp::exact_policy_gradient(f.mdp, actor).norm(), 1e-6);
}

TEST(PolicyGradient, SymmetricBranchesGiveZero) {
  ssp::TabularMdp mdp(3, 2, 2);
  mdp.set_transition(0, 0, 1, 1.0, 0.5);
  mdp.set_transition(0, 1, 1, 1.0, 0.5);
  mdp.set_transition(1, 0, 2, 1.0, 1.0);
  mdp.make_terminal_absorbing();
  mdp.set_initial_distribution(Vector{{1.0, 0.0, 0.0}});
  LinearSoftmaxActor actor(mdp, StateActionFeatures::one_hot(mdp), 20.0);
  EXPECT_TRUE(ssp::exact_policy_gradient(mdp, actor).isZero(1e-15));
}

TEST(ApproximationError, ExactWithIdentityFeatures) {
  ssp::RandomStream rng(8);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto mdp = ssp::random_mdp(7, 3, seed);
    LinearSoftmaxActor actor(mdp, StateActionFeatures(mdp, random_matrix(18, 4, rng)), 20.0, 0.1);
    actor.set_parameters(random_vector(4, rng, 2.0));
    EXPECT_LT(ssp::approximation_error(mdp, actor, StateFeatures::identity(mdp)), 1e-9);
  }
}

TEST(ApproximationError, ChatterFeaturesAreFinite) {
  const auto f = ssp::sarsa_chatter_mdp();
  LinearSoftmaxActor actor(f.mdp, f.action_features, 20.0);
  actor.set_parameters(Vector{{0.3, -0.2, 0.0}});
  const double e = ssp::approximation_error(f.mdp, actor, f.state_features);
  EXPECT_TRUE(std::isfinite(e));
  EXPECT_GT(e, 0.0);
}

TEST(ApproximationError, ZeroCostIsZero) {
  const auto mdp = ssp::testing::zero_cost_mdp();
  LinearSoftmaxActor actor(mdp, StateActionFeatures::one_hot(mdp), 20.0);
  EXPECT_EQ(ssp::approximation_error(mdp, actor, StateFeatures::identity(mdp)), 0.0);
}

TEST(QLfa, ZeroCostStaysZero) {
  const auto mdp = ssp::testing::zero_cost_mdp();
  ssp::LfaQRunState rs(mdp, StateActionFeatures::one_hot(mdp), StepSchedule(ScheduleFamily::kAcSlow),
                       ExplorationSchedule{ExplorationKind::kEpsGreedyGlie}, Objective::kMinimize, 1);
  ssp::LfaQRunState sarsa = rs;
  for (int e = 0; e < 500; ++e) ssp::q_lfa_episode(rs, mdp), ssp::sarsa_lfa_episode(sarsa, mdp);
  EXPECT_TRUE(rs.q.isZero(0.0));
  EXPECT_TRUE(sarsa.q.isZero(0.0));
}

// On the counterexample every target is 0 or an entry of q, so with steps at
// most 1 each update is a convex combination and ||q||_inf cannot grow.
TEST(QLfa, CounterexampleUpdatesAreContractive) {
  const auto f = ssp::qlfa_counterexample();
  ExplorationSchedule uniform{ExplorationKind::kConstantEps};
  uniform.epsilon = 1.0;
  ssp::LfaQRunState rs(f.mdp, f.action_features, StepSchedule(ScheduleFamily::kAcSlow), uniform,
                       Objective::kMinimize, 2);
  rs.q = Vector{{-2.0, -1.0}};
  double prev = 2.0;
  rs.after_update = [&] {
    const double norm = rs.q.lpNorm<Eigen::Infinity>();
    ASSERT_LE(norm, prev + 1e-15);
    prev = norm;
  };
  for (int e = 0; e < 10'000; ++e) ssp::q_lfa_episode(rs, f.mdp);
  EXPECT_FALSE(rs.diverged);
}

TEST(QLfa, DivergenceGuardFlagsAndStops) {
  // Step scale 50 on a self-loop amplifies q by (1 - 50) each update.
  const auto f = ssp::qlfa_counterexample();
  ExplorationSchedule uniform{ExplorationKind::kConstantEps};
  uniform.epsilon = 1.0;
  ssp::LfaQRunState rs(f.mdp, f.action_features, StepSchedule(ScheduleFamily::kPowerLaw, 50.0, 0.6), uniform,
                       Objective::kMinimize, 3);
  rs.q = Vector{{-2.0, -1.0}};
  for (int e = 0; e < 1000 && !rs.diverged; ++e) ssp::q_lfa_episode(rs, f.mdp);
  ASSERT_TRUE(rs.diverged);
  ASSERT_TRUE(rs.diverged_at.has_value());
  EXPECT_EQ(*rs.diverged_at, rs.updates);
  const auto frozen = rs.q;
  EXPECT_EQ(ssp::q_lfa_episode(rs, f.mdp).length, 0u);
  EXPECT_EQ(rs.q, frozen);
}

// One-hot features reduce the linear learners to their tabular versions.
template <typename LfaEpisode, typename TabularEpisode>
void expect_one_hot_equivalence(const ssp::TabularMdp& mdp, ExplorationSchedule explore, Objective objective,
                                LfaEpisode lfa_episode, TabularEpisode tabular_episode) {
  const StepSchedule step(ScheduleFamily::kPowerLaw, 1.0, 0.7);
  ssp::LfaQRunState lfa(mdp, StateActionFeatures::one_hot(mdp), step, explore, objective, 41);
  ssp::QRunState tab(mdp, step, explore, objective, 41);
  tab.counting = ssp::StepCounting::kGlobal;
  std::vector<Vector> lfa_trace, tab_trace;
  lfa.after_update = [&] { lfa_trace.push_back(lfa.q); };
  tab.after_update = [&] {
    Vector flat = Vector::Zero(lfa.q.size());
    for (ssp::State i : mdp.nonterminal_states())
      for (ssp::Action u = 0; u < mdp.num_actions(); ++u)
        flat(static_cast<Eigen::Index>(StateActionFeatures::one_hot_index(mdp, i, u))) = tab.q(i, u);
    tab_trace.push_back(flat);
  };
  while (lfa_trace.size() < 10'000) {
    lfa_episode(lfa, mdp);
    tabular_episode(tab, mdp);
  }
  ASSERT_EQ(lfa_trace.size(), tab_trace.size());
  for (std::size_t k = 0; k < lfa_trace.size(); ++k)
    ASSERT_LE((lfa_trace[k] - tab_trace[k]).cwiseAbs().maxCoeff(), 1e-12) << "step " << k;
}

TEST(OneHot, QLearningEquivalence) {
  expect_one_hot_equivalence(ssp::random_mdp(8, 3, 2), ExplorationSchedule{ExplorationKind::kEpsGreedyGlie},
                             Objective::kMinimize, ssp::q_lfa_episode, ssp::q_learning_episode);
  expect_one_hot_equivalence(ssp::frozen_lake(ssp::GridSpec::standard_4x4()).mdp,
                             ExplorationSchedule{ExplorationKind::kSoftmaxGlie}, Objective::kMaximize,
                             ssp::q_lfa_episode, ssp::q_learning_episode);
}

TEST(OneHot, SarsaEquivalence) {
  ExplorationSchedule eps_softmax{ExplorationKind::kEpsSoftmax};
  eps_softmax.temperature = 0.5;
  expect_one_hot_equivalence(ssp::random_mdp(8, 3, 3), eps_softmax, Objective::kMinimize, ssp::sarsa_lfa_episode,
                             ssp::sarsa_episode);
  expect_one_hot_equivalence(ssp::sarsa_chatter_mdp().mdp, ExplorationSchedule{ExplorationKind::kEpsGreedyGlie},
                             Objective::kMinimize, ssp::sarsa_lfa_episode, ssp::sarsa_episode);
}

TEST(SarsaLfa, ChatterEpisodesHaveLengthTwo) {
  const auto f = ssp::sarsa_chatter_mdp();
  ExplorationSchedule explore{ExplorationKind::kEpsSoftmax};
  explore.temperature = 0.01;
  ssp::LfaQRunState rs(f.mdp, f.action_features, StepSchedule(ScheduleFamily::kAcSlow, 0.01), explore,
                       Objective::kMinimize, 5);
  for (int e = 0; e < 1000; ++e) ASSERT_EQ(ssp::sarsa_lfa_episode(rs, f.mdp).length, 2u);
  EXPECT_EQ(rs.updates, 2000u);
  EXPECT_EQ(rs.episodes, 1000u);
}

}  // namespace
