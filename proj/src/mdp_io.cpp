#include "ssp/mdp_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssp {

std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_real: conversion failed");
  return std::string(buf, end);
}

double parse_real(const std::string& text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a real number: '" + text + "'");
  return x;
}

namespace {

void write_matrix(std::ostream& out, const char* kind, const Matrix& m) {
  out << "features " << kind << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_real(m(r, c));
    out << '\n';
  }
}

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw ModelError(std::string("unexpected end of input while reading ") + what);
  return tok;
}

std::size_t parse_count(const std::string& tok) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ModelError("expected a non-negative integer, got '" + tok + "'");
  return v;
}

Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_real(next_token(in, "features"));
  return m;
}

}  // namespace

void write_mdp(std::ostream& out, const TabularMdp& mdp) {
  out << mdp.num_states() << ' ' << mdp.num_actions() << ' ' << mdp.terminal() << '\n';
  for (State i = 0; i < mdp.num_states(); ++i)
    for (Action u = 0; u < mdp.num_actions(); ++u)
      for (State j = 0; j < mdp.num_states(); ++j)
        if (mdp.p(i, u, j) != 0.0)
          out << i << ' ' << u << ' ' << j << ' ' << format_real(mdp.p(i, u, j)) << ' '
              << format_real(mdp.g(i, u, j)) << '\n';
  out << "h0";
  const Vector& h0 = mdp.initial_distribution();
  for (Eigen::Index k = 0; k < h0.size(); ++k) out << ' ' << format_real(h0(k));
  out << '\n';
}

void write_problem(std::ostream& out, const Problem& problem) {
  write_mdp(out, problem.mdp);
  if (problem.state_features) write_matrix(out, "state", problem.state_features->matrix());
  if (problem.action_features) write_matrix(out, "state_action", problem.action_features->matrix());
}

TabularMdp read_mdp(std::istream& in) {
  const auto n_states = parse_count(next_token(in, "header"));
  const auto n_actions = parse_count(next_token(in, "header"));
  const auto terminal = parse_count(next_token(in, "header"));
  TabularMdp mdp(n_states, n_actions, terminal);
  for (;;) {
    const std::string tok = next_token(in, "transitions");
    if (tok == "h0") break;
    const auto i = parse_count(tok);
    const auto u = parse_count(next_token(in, "transition"));
    const auto j = parse_count(next_token(in, "transition"));
    const double p = parse_real(next_token(in, "transition"));
    const double g = parse_real(next_token(in, "transition"));
    mdp.set_transition(i, u, j, p, g);
  }
  Vector h0(static_cast<Eigen::Index>(n_states));
  for (std::size_t k = 0; k < n_states; ++k) h0(static_cast<Eigen::Index>(k)) = parse_real(next_token(in, "h0"));
  mdp.set_initial_distribution(std::move(h0));
  return mdp;
}

Problem read_problem(std::istream& in) {
  Problem problem{read_mdp(in), std::nullopt, std::nullopt};
  std::string tok;
  while (in >> tok) {
    if (tok != "features") throw ModelError("unexpected token '" + tok + "' after h0 line");
    const std::string kind = next_token(in, "feature block");
    const auto rows = parse_count(next_token(in, "feature block"));
    const auto cols = parse_count(next_token(in, "feature block"));
    Matrix m = read_matrix(in, rows, cols);
    if (kind == "state")
      problem.state_features.emplace(problem.mdp, m);
    else if (kind == "state_action")
      problem.action_features.emplace(problem.mdp, m);
    else
      throw ModelError("unknown feature block '" + kind + "'");
  }
  return problem;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_problem(in);
}

void save_problem(const std::string& path, const Problem& problem) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_problem(out, problem);
}

}  // namespace ssp
