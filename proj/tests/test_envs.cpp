#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <deque>
#include <sstream>

#include "ssp/envs.hpp"
#include "ssp/mdp_io.hpp"
#include "ssp/solvers.hpp"
#include "test_support.hpp"

namespace {

using ssp::Objective;
using ssp::Vector;

TEST(RandomMdp, LeakAndValidity) {
  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    const auto mdp = ssp::random_mdp(20, 4, seed);
    EXPECT_NO_THROW(ssp::validate(mdp));
    EXPECT_EQ(mdp.terminal(), 19u);
    for (ssp::State i : mdp.nonterminal_states())
      for (ssp::Action u = 0; u < 4; ++u) {
        ASSERT_TRUE(mdp.feasible(i, u));
        ASSERT_GE(mdp.p(i, u, mdp.terminal()), 0.05);
        for (ssp::State j = 0; j < 20; ++j) {
          ASSERT_GE(mdp.g(i, u, j), 0.0);
          ASSERT_LT(mdp.g(i, u, j), 1.0);
        }
      }
    for (ssp::State i : mdp.nonterminal_states()) EXPECT_DOUBLE_EQ(mdp.initial_distribution()(i), 1.0 / 19.0);
  }
}

TEST(RandomMdp, ProbeBelowGeometricBound) {
  ssp::RandomStream rng(11);
  for (std::uint64_t seed : {5u, 6u}) {
    const auto mdp = ssp::random_mdp(7, 3, seed);
    const double bound = 1.0 - std::pow(0.05, static_cast<double>(mdp.num_nonterminal()));
    for (int k = 0; k < 10; ++k) EXPECT_LT(ssp::properness_probe(mdp, ssp::testing::random_policy(mdp, rng)), bound);
  }
}

TEST(RandomMdp, DeterministicInSeed) {
  const auto a = ssp::random_mdp(12, 3, 42);
  const auto b = ssp::random_mdp(12, 3, 42);
  EXPECT_TRUE(a == b);
  std::ostringstream sa, sb;
  ssp::write_mdp(sa, a);
  ssp::write_mdp(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  std::istringstream in(sa.str());
  EXPECT_TRUE(ssp::read_mdp(in) == a);
  EXPECT_FALSE(ssp::random_mdp(12, 3, 43) == a);
}

TEST(RandomMdp, LeakIsConfigurable) {
  const auto mdp = ssp::random_mdp(5, 2, 1, 0.5);
  for (ssp::State i : mdp.nonterminal_states())
    for (ssp::Action u = 0; u < 2; ++u) EXPECT_GE(mdp.p(i, u, mdp.terminal()), 0.5);
  EXPECT_THROW(ssp::random_mdp(1, 2, 1), ssp::ModelError);
  EXPECT_THROW(ssp::random_mdp(5, 2, 1, 0.0), ssp::ModelError);
}

TEST(GridSpec, StandardLayouts) {
  const auto small = ssp::GridSpec::standard_4x4();
  EXPECT_EQ(small.width(), 4u);
  EXPECT_EQ(small.height(), 4u);
  EXPECT_EQ(small.rows[0], "SFFF");
  EXPECT_EQ(small.rows[3], "HFFG");
  const auto big = ssp::GridSpec::standard_8x8();
  EXPECT_EQ(big.width(), 8u);
  EXPECT_EQ(big.height(), 8u);
  EXPECT_DOUBLE_EQ(small.slip, 2.0 / 3.0);
}

TEST(GridSpec, ParseAcceptsNewlines) {
  const auto spec = ssp::GridSpec::parse("SF\nHG\n", 0.2);
  EXPECT_EQ(spec.rows, (std::vector<std::string>{"SF", "HG"}));
  EXPECT_EQ(spec.slip, 0.2);
}

TEST(GridSpec, InvalidLayouts) {
  EXPECT_THROW(ssp::GridSpec::parse(""), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("SFF/FG"), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("SX/FG"), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("FF/FG"), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("SS/FG"), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("SF/FH"), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("SF/FG", 1.0), ssp::ModelError);
  EXPECT_THROW(ssp::GridSpec::parse("SF/FG", -0.1), ssp::ModelError);
  ssp::GridSpec bad{{"SF", "F"}};
  EXPECT_THROW(ssp::frozen_lake(bad), ssp::ModelError);
}

// Independent construction of the grid dynamics from cell coordinates.
struct GridOracle {
  const ssp::GridSpec& spec;
  ssp::Matrix prob;    // rows (s*4+a), columns non-terminal states then terminal
  ssp::Matrix reward;  // (s, a) expected reward

  explicit GridOracle(const ssp::GridSpec& s, const std::vector<std::size_t>& cells) : spec(s) {
    const int w = static_cast<int>(spec.width()), h = static_cast<int>(spec.height());
    const std::size_t n = cells.size();
    prob = ssp::Matrix::Zero(static_cast<Eigen::Index>(n * 4), static_cast<Eigen::Index>(n + 1));
    reward = ssp::Matrix::Zero(static_cast<Eigen::Index>(n), 4);
    const std::array<std::array<int, 2>, 4> delta{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};  // left down right up
    auto state_at = [&](int r, int c) -> std::ptrdiff_t {
      for (std::size_t k = 0; k < n; ++k)
        if (cells[k] == static_cast<std::size_t>(r * w + c)) return static_cast<std::ptrdiff_t>(k);
      return -1;
    };
    for (std::size_t k = 0; k < n; ++k) {
      const int r0 = static_cast<int>(cells[k]) / w, c0 = static_cast<int>(cells[k]) % w;
      for (int a = 0; a < 4; ++a)
        for (int d = 0; d < 4; ++d) {
          const bool same = d == a;
          const bool perpendicular = delta[d][0] * delta[a][0] + delta[d][1] * delta[a][1] == 0;
          if (!same && !perpendicular) continue;
          const double weight = same ? 1.0 - spec.slip : spec.slip / 2.0;
          int r = r0 + delta[d][0], c = c0 + delta[d][1];
          if (r < 0 || r >= h || c < 0 || c >= w) r = r0, c = c0;
          const char cell = spec.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
          const auto row = static_cast<Eigen::Index>(k * 4 + static_cast<std::size_t>(a));
          if (cell == 'H' || cell == 'G') {
            prob(row, static_cast<Eigen::Index>(n)) += weight;
            if (cell == 'G') reward(static_cast<Eigen::Index>(k), a) += weight;
          } else {
            prob(row, state_at(r, c)) += weight;
          }
        }
    }
  }
};

void expect_matches_oracle(const ssp::GridSpec& spec) {
  const auto grid = ssp::frozen_lake(spec);
  const auto& mdp = grid.mdp;
  EXPECT_NO_THROW(ssp::validate(mdp));
  const GridOracle oracle(spec, grid.cell_of_state);
  const std::size_t n = grid.cell_of_state.size();
  ASSERT_EQ(mdp.num_states(), n + 1);
  for (ssp::State s = 0; s < n; ++s)
    for (ssp::Action a = 0; a < 4; ++a) {
      const auto row = static_cast<Eigen::Index>(s * 4 + a);
      for (ssp::State j = 0; j <= n; ++j) ASSERT_NEAR(mdp.p(s, a, j), oracle.prob(row, j), 1e-15);
      ASSERT_NEAR(mdp.expected_cost(s, a), oracle.reward(s, a), 1e-15);
    }
}

TEST(FrozenLake, MatchesCoordinateOracle) {
  expect_matches_oracle(ssp::GridSpec::standard_4x4());
  expect_matches_oracle(ssp::GridSpec::standard_8x8());
  expect_matches_oracle(ssp::GridSpec::parse("SFH/FFF/HFG", 0.3));
  expect_matches_oracle(ssp::GridSpec::parse("SFG/HFG", 0.0));
}

TEST(FrozenLake, StatesAndStart) {
  const auto grid = ssp::frozen_lake(ssp::GridSpec::standard_4x4());
  EXPECT_EQ(grid.mdp.num_states(), 12u);  // 11 start/frozen cells plus the terminal
  EXPECT_EQ(grid.mdp.num_actions(), 4u);
  EXPECT_EQ(grid.cell_of_state.front(), 0u);
  EXPECT_EQ(grid.mdp.initial_distribution()(0), 1.0);
  EXPECT_EQ(grid.mdp.initial_distribution().sum(), 1.0);
}

TEST(FrozenLake, RowsStochasticNextToHoles) {
  const auto grid = ssp::frozen_lake(ssp::GridSpec::standard_4x4());
  const auto& mdp = grid.mdp;
  // Cell 1 sits above the hole at cell 5.
  const ssp::State s = 1;
  ASSERT_EQ(grid.cell_of_state[s], 1u);
  for (ssp::Action a = 0; a < 4; ++a) {
    double total = 0.0;
    for (ssp::State j = 0; j < mdp.num_states(); ++j) total += mdp.p(s, a, j);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_NEAR(mdp.p(s, ssp::kDown, mdp.terminal()), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(mdp.expected_cost(s, ssp::kDown), 0.0);
}

TEST(FrozenLake, OptimalStartValueInUnitInterval) {
  const auto grid = ssp::frozen_lake(ssp::GridSpec::standard_4x4());
  const auto vi = ssp::value_iteration(grid.mdp, 1e-12, Objective::kMaximize);
  const double v0 = vi.value(0);
  EXPECT_GT(v0, 0.0);
  EXPECT_LT(v0, 1.0);
  // The greedy policy's exact value reproduces the optimum.
  const auto pi = ssp::greedy_policy(grid.mdp, vi.value, Objective::kMaximize);
  EXPECT_NEAR(ssp::exact_policy_value(grid.mdp, pi)(0), v0, 1e-8);
}

// Breadth-first search over safe cells from the start to a goal.
bool safe_path_exists(const ssp::GridSpec& spec) {
  const std::size_t w = spec.width(), h = spec.height();
  std::vector<bool> seen(w * h, false);
  std::deque<std::size_t> frontier;
  for (std::size_t cell = 0; cell < w * h; ++cell)
    if (spec.rows[cell / w][cell % w] == 'S') frontier.push_back(cell), seen[cell] = true;
  while (!frontier.empty()) {
    const std::size_t cell = frontier.front();
    frontier.pop_front();
    const char c = spec.rows[cell / w][cell % w];
    if (c == 'G') return true;
    if (c == 'H') continue;
    const std::size_t r = cell / w, col = cell % w;
    std::vector<std::size_t> next;
    if (r > 0) next.push_back(cell - w);
    if (r + 1 < h) next.push_back(cell + w);
    if (col > 0) next.push_back(cell - 1);
    if (col + 1 < w) next.push_back(cell + 1);
    for (std::size_t m : next)
      if (!seen[m]) seen[m] = true, frontier.push_back(m);
  }
  return false;
}

TEST(FrozenLake, NoSlipReachesGoalWithCertainty) {
  for (const char* layout : {"SFFF/FHFH/FFFH/HFFG", "SFH/FHF/FFG", "SH/HG"}) {
    auto spec = ssp::GridSpec::parse(layout, 0.0);
    const auto grid = ssp::frozen_lake(spec);
    const double v0 = ssp::value_iteration(grid.mdp, 1e-12, Objective::kMaximize).value(0);
    EXPECT_NEAR(v0, safe_path_exists(spec) ? 1.0 : 0.0, 1e-12) << layout;
  }
}

TEST(FrozenLake, FullSupportPoliciesTerminate) {
  const auto grid = ssp::frozen_lake(ssp::GridSpec::standard_4x4());
  ssp::RandomStream rng(3);
  for (int k = 0; k < 10; ++k) EXPECT_LT(ssp::properness_probe(grid.mdp, ssp::testing::random_policy(grid.mdp, rng)), 1.0);
}

TEST(QlfaCounterexample, Structure) {
  const auto f = ssp::qlfa_counterexample();
  const auto& mdp = f.mdp;
  EXPECT_NO_THROW(ssp::validate(mdp));
  EXPECT_EQ(mdp.terminal(), 2u);
  for (ssp::State i : {0u, 1u}) {
    EXPECT_EQ(mdp.p(i, 0, 1), 0.9);
    EXPECT_EQ(mdp.p(i, 0, 2), 0.1);
    EXPECT_EQ(mdp.p(i, 1, 0), 0.9);
    EXPECT_EQ(mdp.p(i, 1, 2), 0.1);
    for (ssp::Action u : {0u, 1u}) EXPECT_EQ(mdp.expected_cost(i, u), 0.0);
  }
  EXPECT_EQ(mdp.initial_distribution(), (Vector{{0.5, 0.5, 0.0}}));
  const auto vi = ssp::value_iteration(mdp, 1e-12, Objective::kMinimize);
  EXPECT_EQ(vi.value, Vector::Zero(3));
}

TEST(QlfaCounterexample, Features) {
  const auto f = ssp::qlfa_counterexample();
  for (ssp::State i : {0u, 1u}) {
    EXPECT_EQ(f.action_features.row(i, 0), (Eigen::RowVector2d{1.0, 0.0}));
    EXPECT_EQ(f.action_features.row(i, 1), (Eigen::RowVector2d{0.0, 1.0}));
    EXPECT_EQ(f.state_features.dot(Vector::Ones(1), i), 1.0);
  }
  EXPECT_EQ(f.action_features.row(2, 0).norm(), 0.0);
  EXPECT_EQ(f.state_features.row(2).norm(), 0.0);
  EXPECT_EQ(Eigen::FullPivLU<ssp::Matrix>(f.action_features.matrix()).rank(), 2);
  EXPECT_NO_THROW(f.action_features.check_independent_columns(f.mdp));
  EXPECT_NO_THROW(f.state_features.check_independent_columns());
}

TEST(SarsaChatter, Structure) {
  const auto f = ssp::sarsa_chatter_mdp();
  const auto& mdp = f.mdp;
  EXPECT_NO_THROW(ssp::validate(mdp));
  EXPECT_EQ(mdp.feasible_actions(0), (std::vector<ssp::Action>{0, 1}));
  EXPECT_EQ(mdp.feasible_actions(1), (std::vector<ssp::Action>{0}));
  EXPECT_EQ(mdp.feasible_actions(2), (std::vector<ssp::Action>{0}));
  EXPECT_EQ(mdp.p(0, 0, 1), 1.0);
  EXPECT_EQ(mdp.p(0, 1, 2), 1.0);
  EXPECT_EQ(mdp.g(1, 0, 3), -2.0);
  EXPECT_EQ(mdp.g(2, 0, 3), -1.0);
  EXPECT_EQ(mdp.initial_distribution()(0), 1.0);
}

TEST(SarsaChatter, Values) {
  const auto f = ssp::sarsa_chatter_mdp();
  const auto vi = ssp::value_iteration(f.mdp, 1e-12, Objective::kMinimize);
  EXPECT_EQ(f.mdp.reduce(vi.value), (Vector{{-2.0, -2.0, -1.0}}));
  const Vector uniform = ssp::exact_policy_value(f.mdp, ssp::uniform_policy(f.mdp));
  EXPECT_LT((f.mdp.reduce(uniform) - Vector{{-1.5, -2.0, -1.0}}).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SarsaChatter, Features) {
  const auto f = ssp::sarsa_chatter_mdp();
  EXPECT_EQ(f.action_features.row(0, 0), (Eigen::RowVector3d{1.0, 0.0, 0.0}));
  EXPECT_EQ(f.action_features.row(0, 1), (Eigen::RowVector3d{0.0, 1.0, 0.0}));
  EXPECT_EQ(f.action_features.row(1, 0), (Eigen::RowVector3d{0.0, 0.0, 1.0}));
  EXPECT_EQ(f.action_features.row(2, 0), (Eigen::RowVector3d{0.0, 0.0, 1.0}));
  EXPECT_EQ(f.state_features.row(0), (Eigen::RowVector2d{1.0, 0.0}));
  EXPECT_EQ(f.state_features.row(1), (Eigen::RowVector2d{0.0, 1.0}));
  EXPECT_EQ(f.state_features.row(2), (Eigen::RowVector2d{0.0, 1.0}));
  EXPECT_NO_THROW(f.action_features.check_independent_columns(f.mdp));
  EXPECT_NO_THROW(f.state_features.check_independent_columns());
}

TEST(Generators, AllPassProbeUnderRandomPolicies) {
  ssp::RandomStream rng(17);
  std::vector<ssp::TabularMdp> zoo{ssp::random_mdp(20, 4, 0), ssp::qlfa_counterexample().mdp,
                                   ssp::sarsa_chatter_mdp().mdp,
                                   ssp::frozen_lake(ssp::GridSpec::standard_8x8()).mdp};
  for (const auto& mdp : zoo)
    for (int k = 0; k < 10; ++k) EXPECT_LT(ssp::properness_probe(mdp, ssp::testing::random_policy(mdp, rng)), 1.0);
}

TEST(Generators, CertificateOnDiagnosticMdps) {
  const auto c4 = ssp::auxiliary_certificate(ssp::qlfa_counterexample().mdp);
  EXPECT_NEAR(c4.beta, 0.9, 1e-9);
  EXPECT_NEAR(c4.xi(0), 10.0, 1e-8);
  const auto c5 = ssp::auxiliary_certificate(ssp::sarsa_chatter_mdp().mdp);
  EXPECT_NEAR(c5.beta, 0.5, 1e-12);
  EXPECT_EQ(c5.xi, (Vector{{2.0, 1.0, 1.0, 0.0}}));
  // The grid admits policies that never leave the frozen cells.
  EXPECT_THROW(ssp::auxiliary_certificate(ssp::frozen_lake(ssp::GridSpec::standard_4x4()).mdp), ssp::ModelError);
}

}  // namespace
