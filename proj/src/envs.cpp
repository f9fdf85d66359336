#include "ssp/envs.hpp"

#include <sstream>

#include "ssp/rng.hpp"

namespace ssp {

TabularMdp random_mdp(std::size_t num_states, std::size_t num_actions, std::uint64_t seed,
                      double termination_leak) {
  if (num_states < 2) throw ModelError("random_mdp needs at least two states");
  if (!(termination_leak > 0.0 && termination_leak <= 1.0))
    throw ModelError("termination leak must lie in (0, 1]");
  const State terminal = num_states - 1;
  TabularMdp mdp(num_states, num_actions, terminal);
  RandomStream transitions(seed, "random_mdp/transitions");
  RandomStream costs(seed, "random_mdp/costs");
  std::vector<double> row(num_states);
  for (State i = 0; i < terminal; ++i) {
    for (Action u = 0; u < num_actions; ++u) {
      double total = 0.0;
      for (auto& x : row) total += (x = transitions.exponential());
      for (State j = 0; j < num_states; ++j) {
        double p = (1.0 - termination_leak) * row[j] / total;
        if (j == terminal) p += termination_leak;
        mdp.set_transition(i, u, j, p, costs.uniform());
      }
    }
  }
  mdp.make_terminal_absorbing();
  Vector h0 = Vector::Zero(static_cast<Eigen::Index>(num_states));
  for (State i = 0; i < terminal; ++i) h0(static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(terminal);
  mdp.set_initial_distribution(std::move(h0));
  return mdp;
}

GridSpec GridSpec::parse(const std::string& text, double slip) {
  GridSpec spec;
  spec.slip = slip;
  std::string row;
  for (char c : text) {
    if (c == '\n' || c == '/') {
      if (!row.empty()) spec.rows.push_back(row);
      row.clear();
    } else if (c != ' ' && c != '\r' && c != '\t') {
      row.push_back(c);
    }
  }
  if (!row.empty()) spec.rows.push_back(row);
  spec.validate();
  return spec;
}

GridSpec GridSpec::standard_4x4() { return parse("SFFF/FHFH/FFFH/HFFG"); }

GridSpec GridSpec::standard_8x8() {
  return parse("SFFFFFFF/FFFFFFFF/FFFHFFFF/FFFFFHFF/FFFHFFFF/FHHFFFHF/FHFFHFHF/FFFHFFFG");
}

void GridSpec::validate() const {
  if (rows.empty() || rows.front().empty()) throw ModelError("grid is empty");
  std::size_t starts = 0, goals = 0;
  for (const auto& r : rows) {
    if (r.size() != width()) throw ModelError("grid rows have unequal length");
    for (char c : r) {
      if (c == 'S') ++starts;
      else if (c == 'G') ++goals;
      else if (c != 'F' && c != 'H') throw ModelError(std::string("unknown grid cell '") + c + "'");
    }
  }
  if (starts != 1) throw ModelError("grid needs exactly one start cell");
  if (goals == 0) throw ModelError("grid needs at least one goal cell");
  if (!(slip >= 0.0 && slip < 1.0)) throw ModelError("slip must lie in [0, 1)");
}

GridWorld frozen_lake(const GridSpec& spec) {
  spec.validate();
  const std::size_t w = spec.width(), h = spec.height();
  auto cell_char = [&](std::size_t cell) { return spec.rows[cell / w][cell % w]; };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<std::size_t> state_of_cell(w * h, kNone);
  std::vector<std::size_t> cell_of_state;
  for (std::size_t cell = 0; cell < w * h; ++cell) {
    const char c = cell_char(cell);
    if (c == 'S' || c == 'F') {
      state_of_cell[cell] = cell_of_state.size();
      cell_of_state.push_back(cell);
    }
  }
  const State terminal = cell_of_state.size();
  TabularMdp mdp(terminal + 1, 4, terminal);

  auto move = [&](std::size_t cell, Action a) {
    std::size_t r = cell / w, c = cell % w;
    switch (a) {
      case kLeft: c = c > 0 ? c - 1 : c; break;
      case kDown: r = r + 1 < h ? r + 1 : r; break;
      case kRight: c = c + 1 < w ? c + 1 : c; break;
      case kUp: r = r > 0 ? r - 1 : r; break;
    }
    return r * w + c;
  };

  for (State s = 0; s < terminal; ++s) {
    const std::size_t cell = cell_of_state[s];
    for (Action a = 0; a < 4; ++a) {
      std::vector<double> prob(terminal + 1, 0.0);
      double goal_mass = 0.0;
      const std::pair<Action, double> outcomes[3] = {
          {(a + 3) % 4, spec.slip / 2.0}, {a, 1.0 - spec.slip}, {(a + 1) % 4, spec.slip / 2.0}};
      for (const auto& [dir, weight] : outcomes) {
        if (weight == 0.0) continue;
        const std::size_t target = move(cell, dir);
        const char c = cell_char(target);
        if (c == 'G') {
          prob[terminal] += weight;
          goal_mass += weight;
        } else if (c == 'H') {
          prob[terminal] += weight;
        } else {
          prob[state_of_cell[target]] += weight;
        }
      }
      for (State j = 0; j < terminal; ++j)
        if (prob[j] > 0.0) mdp.set_transition(s, a, j, prob[j], 0.0);
      if (prob[terminal] > 0.0) mdp.set_transition(s, a, terminal, prob[terminal], goal_mass / prob[terminal]);
    }
  }
  mdp.make_terminal_absorbing();

  Vector h0 = Vector::Zero(static_cast<Eigen::Index>(terminal + 1));
  for (State s = 0; s < terminal; ++s)
    if (cell_char(cell_of_state[s]) == 'S') h0(static_cast<Eigen::Index>(s)) = 1.0;
  mdp.set_initial_distribution(std::move(h0));
  return {std::move(mdp), std::move(cell_of_state)};
}

FeaturedMdp qlfa_counterexample() {
  TabularMdp mdp(3, 2, 2);
  for (State i = 0; i < 2; ++i) {
    mdp.set_transition(i, 0, 1, 0.9, 0.0);
    mdp.set_transition(i, 0, 2, 0.1, 0.0);
    mdp.set_transition(i, 1, 0, 0.9, 0.0);
    mdp.set_transition(i, 1, 2, 0.1, 0.0);
  }
  mdp.make_terminal_absorbing();
  mdp.set_initial_distribution(Vector{{0.5, 0.5, 0.0}});
  Matrix action_rows{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};
  Matrix state_rows{{1.0}, {1.0}};
  StateActionFeatures phi1(mdp, action_rows);
  StateFeatures phi(mdp, state_rows);
  return {std::move(mdp), std::move(phi1), std::move(phi)};
}

FeaturedMdp sarsa_chatter_mdp() {
  TabularMdp mdp(4, 2, 3);
  mdp.set_transition(0, 0, 1, 1.0, 0.0);
  mdp.set_transition(0, 1, 2, 1.0, 0.0);
  mdp.set_transition(1, 0, 3, 1.0, -2.0);
  mdp.set_transition(2, 0, 3, 1.0, -1.0);
  mdp.make_terminal_absorbing();
  mdp.set_initial_distribution(Vector{{1.0, 0.0, 0.0, 0.0}});
  // Rows for infeasible (i2,u1) and (i3,u1) are never used.
  Matrix action_rows{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 0.0},
                     {0.0, 0.0, 1.0}, {0.0, 0.0, 0.0}};
  Matrix state_rows{{1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}};
  StateActionFeatures phi1(mdp, action_rows);
  StateFeatures phi(mdp, state_rows);
  return {std::move(mdp), std::move(phi1), std::move(phi)};
}

}  // namespace ssp
