#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ssp/features.hpp"
#include "ssp/mdp.hpp"

namespace ssp {

/// An MDP plus optional feature maps, as stored in the plain-text format:
///
///   <states> <actions> <terminal>
///   <i> <u> <j> <p> <g>          one line per nonzero transition
///   h0 <h0[0]> ... <h0[S-1]>
///   features state <rows> <cols>          optional, followed by rows
///   features state_action <rows> <cols>   optional, followed by rows
///
/// Reals are printed in shortest round-trip form, so write/read is exact.
struct Problem {
  TabularMdp mdp;
  std::optional<StateFeatures> state_features;
  std::optional<StateActionFeatures> action_features;
};

void write_problem(std::ostream& out, const Problem& problem);
Problem read_problem(std::istream& in);

void write_mdp(std::ostream& out, const TabularMdp& mdp);
TabularMdp read_mdp(std::istream& in);

Problem load_problem(const std::string& path);
void save_problem(const std::string& path, const Problem& problem);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_real(double x);
double parse_real(const std::string& text);

}  // namespace ssp
