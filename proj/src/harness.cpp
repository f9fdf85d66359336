#include "ssp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "ssp/envs.hpp"
#include "ssp/linear_fa.hpp"
#include "ssp/schedules.hpp"
#include "ssp/solvers.hpp"
#include "ssp/tabular.hpp"

namespace ssp {

// ---------------------------------------------------------------------------
// Algorithms

namespace {

constexpr std::pair<Algorithm, const char*> kAlgorithmNames[] = {
    {Algorithm::kAc, "ac"},         {Algorithm::kCa, "ca"},       {Algorithm::kAcOnline, "ac-online"},
    {Algorithm::kCaOnline, "ca-online"}, {Algorithm::kQ, "q"},    {Algorithm::kSarsa, "sarsa"},
    {Algorithm::kAcFa, "ac-fa"},    {Algorithm::kQLfa, "q-lfa"},  {Algorithm::kSarsaLfa, "sarsa-lfa"},
};

}  // namespace

const char* to_string(Algorithm algorithm) {
  for (const auto& [a, name] : kAlgorithmNames)
    if (a == algorithm) return name;
  return "?";
}

Algorithm parse_algorithm(const std::string& text) {
  for (const auto& [a, name] : kAlgorithmNames)
    if (text == name) return a;
  throw ConfigError("unknown algorithm '" + text + "'");
}

bool is_function_approximation(Algorithm algorithm) {
  return algorithm == Algorithm::kAcFa || algorithm == Algorithm::kQLfa || algorithm == Algorithm::kSarsaLfa;
}

bool is_offline(Algorithm algorithm) { return algorithm == Algorithm::kAc || algorithm == Algorithm::kCa; }

// ---------------------------------------------------------------------------
// Config keys

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text.front() == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    return parse_real(text);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a real number, got '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(key, part));
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define SSP_STRING_FIELD(name) \
  Field{#name, [](const ExperimentConfig& c) { return c.name; }, [](ExperimentConfig& c, const std::string& v) { c.name = v; }}
#define SSP_UINT_FIELD(name)                                                        \
  Field{#name, [](const ExperimentConfig& c) { return std::to_string(c.name); }, \
        [](ExperimentConfig& c, const std::string& v) { c.name = parse_uint(#name, v); }}
#define SSP_REAL_FIELD(name)                                                     \
  Field{#name, [](const ExperimentConfig& c) { return format_real(c.name); }, \
        [](ExperimentConfig& c, const std::string& v) { c.name = parse_double(#name, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SSP_STRING_FIELD(env),
      SSP_UINT_FIELD(env_states),
      SSP_UINT_FIELD(env_actions),
      SSP_UINT_FIELD(env_seed),
      SSP_REAL_FIELD(env_leak),
      SSP_STRING_FIELD(grid),
      SSP_REAL_FIELD(slip),
      SSP_STRING_FIELD(env_file),
      SSP_STRING_FIELD(features),
      SSP_STRING_FIELD(algorithm),
      SSP_STRING_FIELD(objective),
      SSP_STRING_FIELD(critic_schedule),
      SSP_REAL_FIELD(critic_scale),
      SSP_REAL_FIELD(critic_exponent),
      SSP_STRING_FIELD(actor_schedule),
      SSP_REAL_FIELD(actor_scale),
      SSP_REAL_FIELD(actor_exponent),
      SSP_STRING_FIELD(step_counting),
      SSP_STRING_FIELD(exploration),
      SSP_REAL_FIELD(explore_c),
      SSP_REAL_FIELD(explore_temperature_c),
      SSP_REAL_FIELD(explore_eps),
      SSP_REAL_FIELD(temperature),
      SSP_REAL_FIELD(theta_radius),
      SSP_REAL_FIELD(theta_p),
      SSP_REAL_FIELD(policy_eps),
      SSP_STRING_FIELD(init_v),
      SSP_STRING_FIELD(init_theta),
      SSP_STRING_FIELD(init_q),
      Field{"freeze_actor", [](const ExperimentConfig& c) { return std::string(c.freeze_actor ? "true" : "false"); },
            [](ExperimentConfig& c, const std::string& v) { c.freeze_actor = parse_bool("freeze_actor", v); }},
      SSP_UINT_FIELD(budget),
      SSP_UINT_FIELD(log_interval),
      SSP_UINT_FIELD(window),
      Field{"seeds",
            [](const ExperimentConfig& c) {
              std::string s;
              for (std::size_t k = 0; k < c.seeds.size(); ++k) s += (k ? "," : "") + std::to_string(c.seeds[k]);
              return s;
            },
            [](ExperimentConfig& c, const std::string& v) {
              c.seeds.clear();
              if (trim(v).empty()) return;
              for (const auto& part : split(v, ',')) c.seeds.push_back(parse_uint("seeds", part));
            }},
      SSP_STRING_FIELD(output),
      SSP_UINT_FIELD(episode_cap),
      SSP_REAL_FIELD(divergence_guard),
      SSP_REAL_FIELD(vi_tol),
      SSP_UINT_FIELD(threads),
  };
  return table;
}

#undef SSP_STRING_FIELD
#undef SSP_UINT_FIELD
#undef SSP_REAL_FIELD

}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) return f.set(*this, value);
  throw ConfigError("unknown config key '" + key + "'");
}

bool ExperimentConfig::is_key(const std::string& key) {
  return std::any_of(fields().begin(), fields().end(), [&](const Field& f) { return key == f.key; });
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: '" + t + "'");
    base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

namespace {

// Yields (key, value) for every "# key=value" line of a CSV comment header.
std::vector<std::pair<std::string, std::string>> header_pairs(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() != '#') break;
    const std::string body = trim(line.substr(1));
    const auto eq = body.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_csv_header(std::istream& in) {
  ExperimentConfig config;
  for (const auto& [key, value] : header_pairs(in))
    if (ExperimentConfig::is_key(key)) config.set(key, value);
  return config;
}

std::optional<std::uint64_t> seed_from_csv_header(std::istream& in) {
  for (const auto& [key, value] : header_pairs(in))
    if (key == "seed") return parse_uint("seed", value);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Environment construction and validation

Problem build_problem(const ExperimentConfig& config) {
  auto with_onehot = [&](TabularMdp mdp) {
    Problem problem{std::move(mdp), std::nullopt, std::nullopt};
    if (config.features == "onehot") {
      problem.state_features.emplace(StateFeatures::identity(problem.mdp));
      problem.action_features.emplace(StateActionFeatures::one_hot(problem.mdp));
    } else if (config.features != "none") {
      throw ConfigError("unknown features '" + config.features + "' (expected none or onehot)");
    }
    return problem;
  };
  if (config.env == "random")
    return with_onehot(random_mdp(config.env_states, config.env_actions, config.env_seed, config.env_leak));
  if (config.env == "frozen-lake") {
    GridSpec spec = config.grid == "4x4"   ? GridSpec::standard_4x4()
                    : config.grid == "8x8" ? GridSpec::standard_8x8()
                                           : GridSpec::parse(config.grid);
    spec.slip = config.slip;
    return with_onehot(frozen_lake(spec).mdp);
  }
  if (config.env == "qlfa-counterexample" || config.env == "sarsa-chatter") {
    if (config.features != "none") throw ConfigError("diagnostic environments carry their own features");
    FeaturedMdp f = config.env == "qlfa-counterexample" ? qlfa_counterexample() : sarsa_chatter_mdp();
    return Problem{std::move(f.mdp), std::move(f.state_features), std::move(f.action_features)};
  }
  if (config.env == "file") {
    if (config.env_file.empty()) throw ConfigError("env=file requires env_file");
    return load_problem(config.env_file);
  }
  throw ConfigError("unknown environment '" + config.env + "'");
}

Objective resolve_objective(const ExperimentConfig& config) {
  if (config.objective == "auto") return config.env == "frozen-lake" ? Objective::kMaximize : Objective::kMinimize;
  try {
    return parse_objective(config.objective);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

StepSchedule make_schedule(const std::string& key, const std::string& family, double scale, double exponent,
                           ScheduleFamily fallback) {
  try {
    return StepSchedule(family == "auto" ? fallback : parse_schedule_family(family), scale, exponent);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ScheduleFamily default_critic_family(Algorithm a) {
  switch (a) {
    case Algorithm::kCa:
    case Algorithm::kCaOnline: return ScheduleFamily::kCaFast;
    case Algorithm::kAc:
    case Algorithm::kAcOnline:
    case Algorithm::kAcFa: return ScheduleFamily::kAcFast;
    default: return ScheduleFamily::kAcSlow;
  }
}

ScheduleFamily default_actor_family(Algorithm a) {
  return a == Algorithm::kCa || a == Algorithm::kCaOnline ? ScheduleFamily::kCaSlow : ScheduleFamily::kAcSlow;
}

StepSchedule critic_schedule(const ExperimentConfig& c) {
  return make_schedule("critic_schedule", c.critic_schedule, c.critic_scale, c.critic_exponent,
                       default_critic_family(parse_algorithm(c.algorithm)));
}

StepSchedule actor_schedule(const ExperimentConfig& c) {
  return make_schedule("actor_schedule", c.actor_schedule, c.actor_scale, c.actor_exponent,
                       default_actor_family(parse_algorithm(c.algorithm)));
}

ExplorationSchedule exploration_schedule(const ExperimentConfig& c) {
  ExplorationSchedule s;
  try {
    s.kind = parse_exploration_kind(c.exploration);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.c = c.explore_c;
  s.temperature_c = c.explore_temperature_c;
  s.epsilon = c.explore_eps;
  s.temperature = c.temperature;
  if (!(s.epsilon >= 0.0 && s.epsilon <= 1.0)) throw ConfigError("explore_eps must lie in [0,1]");
  if (!(s.c > 0.0) || !(s.temperature_c > 0.0) || !(s.temperature > 0.0))
    throw ConfigError("exploration constants must be positive");
  return s;
}

Vector init_vector(const std::string& key, const std::string& text, std::size_t dim) {
  const auto values = parse_real_list(key, text);
  if (values.empty()) return Vector::Zero(static_cast<Eigen::Index>(dim));
  if (values.size() != dim)
    throw ConfigError(key + " has " + std::to_string(values.size()) + " entries, expected " + std::to_string(dim));
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(dim));
}

}  // namespace

void validate_config(const ExperimentConfig& config, const Problem& problem) {
  const Algorithm algorithm = parse_algorithm(config.algorithm);
  if (config.budget == 0) throw ConfigError("budget must be positive");
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  if (config.log_interval == 0) throw ConfigError("log_interval must be positive");
  if (config.window == 0) throw ConfigError("window must be positive");
  if (config.episode_cap == 0) throw ConfigError("episode_cap must be positive");
  if (!(config.theta_radius > 0.0) || !(config.theta_p > 0.0)) throw ConfigError("actor radii must be positive");
  if (!(config.policy_eps >= 0.0 && config.policy_eps <= 1.0)) throw ConfigError("policy_eps must lie in [0,1]");
  if (!(config.vi_tol > 0.0)) throw ConfigError("vi_tol must be positive");
  (void)resolve_objective(config);
  (void)critic_schedule(config);
  (void)actor_schedule(config);
  (void)exploration_schedule(config);
  try {
    (void)parse_step_counting(config.step_counting);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    validate(problem.mdp);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("invalid environment: ") + e.what());
  }
  if (algorithm == Algorithm::kAcFa && (!problem.state_features || !problem.action_features))
    throw ConfigError(std::string(to_string(algorithm)) + " requires state and state-action features");
  if ((algorithm == Algorithm::kQLfa || algorithm == Algorithm::kSarsaLfa) && !problem.action_features)
    throw ConfigError(std::string(to_string(algorithm)) + " requires state-action features");
  const std::size_t s = problem.mdp.num_states();
  if (!is_function_approximation(algorithm)) {
    (void)init_vector("init_v", config.init_v, problem.mdp.num_nonterminal());
    (void)init_vector("init_theta", config.init_theta, problem.mdp.num_nonterminal() * problem.mdp.num_actions());
    (void)init_vector("init_q", config.init_q, problem.mdp.num_nonterminal() * problem.mdp.num_actions());
  } else if (algorithm == Algorithm::kAcFa) {
    (void)init_vector("init_v", config.init_v, problem.state_features->dim());
    (void)init_vector("init_theta", config.init_theta, problem.action_features->dim());
  } else {
    (void)init_vector("init_q", config.init_q, problem.action_features->dim());
  }
  (void)s;
}

// ---------------------------------------------------------------------------
// Metrics

double running_return(std::span<const double> returns, std::size_t window) {
  if (returns.empty()) throw std::invalid_argument("running_return: empty history");
  if (window == 0) throw std::invalid_argument("running_return: window must be positive");
  const std::size_t n = std::min(window, returns.size());
  double sum = 0.0;
  for (std::size_t k = returns.size() - n; k < returns.size(); ++k) sum += returns[k];
  return sum / static_cast<double>(n);
}

double value_error(const TabularMdp& mdp, const ValueTable& values, const ValueTable& reference) {
  if (values.size() != reference.size() || values.size() != static_cast<Eigen::Index>(mdp.num_states()))
    throw std::invalid_argument("value_error: shape mismatch");
  double sum = 0.0;
  for (State i : mdp.nonterminal_states()) {
    const double d = values(static_cast<Eigen::Index>(i)) - reference(static_cast<Eigen::Index>(i));
    sum += d * d;
  }
  return std::sqrt(sum);
}

ValueTable fa_value_snapshot(const TabularMdp& mdp, const Vector& v, const StateFeatures& phi) {
  ValueTable out = ValueTable::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  for (State i : mdp.nonterminal_states()) out(static_cast<Eigen::Index>(i)) = phi.dot(v, i);
  return out;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

std::uint64_t hash_params(const std::vector<double>& params) {
  return fnv1a(std::as_bytes(std::span(params.data(), params.size())));
}

std::vector<double> flatten(std::initializer_list<const Vector*> parts) {
  std::vector<double> out;
  for (const Vector* p : parts) out.insert(out.end(), p->data(), p->data() + p->size());
  return out;
}

std::vector<double> flatten_table(const TabularMdp& mdp, const Matrix& table) {
  std::vector<double> out;
  for (State i : mdp.nonterminal_states())
    for (Action u = 0; u < mdp.num_actions(); ++u)
      out.push_back(table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)));
  return out;
}

// Tracks episode returns for the running-return column.
class ReturnWindow {
 public:
  explicit ReturnWindow(std::size_t window) : window_(window) {}
  void push(double r) {
    returns_.push_back(r);
    if (returns_.size() > window_) returns_.pop_front();
  }
  double mean() const {
    if (returns_.empty()) return std::nan("");
    double sum = 0.0;
    for (double r : returns_) sum += r;
    return sum / static_cast<double>(returns_.size());
  }

 private:
  std::size_t window_;
  std::deque<double> returns_;
};

bool should_log(std::uint64_t index, std::uint64_t interval, std::uint64_t budget) {
  return index % interval == 0 || index == budget;
}

void fill_params(RecordRow& row, const std::vector<double>& params, bool log_raw) {
  row.param_hash = hash_params(params);
  double sq = 0.0;
  for (double x : params) sq += x * x;
  row.param_norm = std::sqrt(sq);
  if (log_raw) row.params = params;
}

void set_table_init(const TabularMdp& mdp, const std::string& key, const std::string& text, Matrix& table,
                    double radius = 0.0) {
  const Vector flat = init_vector(key, text, mdp.num_nonterminal() * mdp.num_actions());
  std::size_t k = 0;
  for (State i : mdp.nonterminal_states())
    for (Action u = 0; u < mdp.num_actions(); ++u, ++k) {
      double x = flat(static_cast<Eigen::Index>(k));
      if (radius > 0.0) x = project_box(x, radius);
      if (mdp.feasible(i, u)) table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) = x;
    }
}

void run_tabular_ac(const ExperimentConfig& config, const Problem& problem, const ValueTable& v_star,
                    RunRecord& record) {
  const TabularMdp& mdp = problem.mdp;
  const Algorithm algorithm = parse_algorithm(config.algorithm);
  TabularAgentOptions options;
  options.objective = record.objective;
  options.theta_radius = config.theta_radius;
  options.freeze_actor = config.freeze_actor;
  options.episode_cap = config.episode_cap;
  TabularRunState rs(mdp, critic_schedule(config), actor_schedule(config), options, record.seed);
  rs.values = mdp.expand(init_vector("init_v", config.init_v, mdp.num_nonterminal()));
  {
    const Vector flat = init_vector("init_theta", config.init_theta, mdp.num_nonterminal() * mdp.num_actions());
    std::size_t k = 0;
    for (State i : mdp.nonterminal_states())
      for (Action u = 0; u < mdp.num_actions(); ++u, ++k)
        if (mdp.feasible(i, u)) rs.actor.set(i, u, flat(static_cast<Eigen::Index>(k)));
  }
  record.max_critic_norm = rs.values.lpNorm<Eigen::Infinity>();

  auto snapshot = [&] { return flatten_table(mdp, rs.actor.parameters()); };
  auto emit = [&](std::uint64_t index, std::uint64_t episode, double episode_return, double running) {
    RecordRow row;
    row.index = index;
    row.step = rs.steps;
    row.episode = episode;
    row.episode_return = episode_return;
    row.running_return = running;
    row.value_error = value_error(mdp, rs.values, v_star);
    std::vector<double> params = flatten({&rs.values});
    const auto theta = snapshot();
    params.insert(params.end(), theta.begin(), theta.end());
    fill_params(row, params, false);
    record.rows.push_back(std::move(row));
  };

  try {
    if (is_offline(algorithm)) {
      auto policy_return = [&] {
        return mdp.initial_distribution().dot(exact_policy_value(mdp, rs.actor.policy()));
      };
      const double r0 = policy_return();
      emit(0, 0, r0, r0);
      for (std::uint64_t n = 1; n <= config.budget; ++n) {
        offline_step(rs, mdp);
        record.max_critic_norm = std::max(record.max_critic_norm, rs.values.lpNorm<Eigen::Infinity>());
        if (should_log(n, config.log_interval, config.budget)) {
          const double r = policy_return();
          emit(n, 0, r, r);
        }
      }
    } else {
      ReturnWindow window(config.window);
      emit(0, 0, std::nan(""), std::nan(""));
      for (std::uint64_t m = 1; m <= config.budget; ++m) {
        const EpisodeOutcome outcome = run_online_episode(rs, mdp);
        window.push(outcome.total);
        record.max_critic_norm = std::max(record.max_critic_norm, rs.values.lpNorm<Eigen::Infinity>());
        if (should_log(m, config.log_interval, config.budget)) emit(m, m, outcome.total, window.mean());
      }
    }
  } catch (const std::exception& e) {
    record.failure = e.what();
  }
  record.final_values = rs.values;
  record.final_params = snapshot();
}

void run_tabular_q(const ExperimentConfig& config, const Problem& problem, const ValueTable& v_star,
                   RunRecord& record) {
  const TabularMdp& mdp = problem.mdp;
  const Algorithm algorithm = parse_algorithm(config.algorithm);
  QRunState rs(mdp, critic_schedule(config), exploration_schedule(config), record.objective, record.seed);
  rs.counting = parse_step_counting(config.step_counting);
  rs.episode_cap = config.episode_cap;
  set_table_init(mdp, "init_q", config.init_q, rs.q);

  ReturnWindow window(config.window);
  auto emit = [&](std::uint64_t m, double episode_return) {
    RecordRow row;
    row.index = m;
    row.episode = m;
    row.step = rs.updates;
    row.episode_return = episode_return;
    row.running_return = window.mean();
    const ValueTable v = greedy_values(mdp, rs.q, record.objective);
    row.value_error = value_error(mdp, v, v_star);
    fill_params(row, flatten_table(mdp, rs.q), false);
    record.rows.push_back(std::move(row));
  };
  try {
    emit(0, std::nan(""));
    for (std::uint64_t m = 1; m <= config.budget; ++m) {
      const EpisodeOutcome outcome =
          algorithm == Algorithm::kQ ? q_learning_episode(rs, mdp) : sarsa_episode(rs, mdp);
      window.push(outcome.total);
      if (should_log(m, config.log_interval, config.budget)) emit(m, outcome.total);
    }
  } catch (const std::exception& e) {
    record.failure = e.what();
  }
  record.final_values = greedy_values(mdp, rs.q, record.objective);
  record.final_params = flatten_table(mdp, rs.q);
}

void run_ac_fa(const ExperimentConfig& config, const Problem& problem, const ValueTable& v_star,
               RunRecord& record) {
  const TabularMdp& mdp = problem.mdp;
  LinearSoftmaxActor actor(mdp, *problem.action_features, config.theta_p, config.policy_eps);
  actor.set_parameters(init_vector("init_theta", config.init_theta, actor.dim()));
  FaRunState rs(*problem.state_features, std::move(actor), critic_schedule(config), actor_schedule(config),
                record.objective, record.seed);
  rs.v = init_vector("init_v", config.init_v, rs.phi.dim());
  rs.freeze_actor = config.freeze_actor;
  rs.episode_cap = config.episode_cap;
  record.param_dim = static_cast<std::size_t>(rs.v.size() + rs.actor.parameters().size());

  ReturnWindow window(config.window);
  std::uint64_t steps = 0;
  auto params = [&] { return flatten({&rs.v, &rs.actor.parameters()}); };
  auto emit = [&](std::uint64_t m, double episode_return) {
    RecordRow row;
    row.index = m;
    row.episode = m;
    row.step = steps;
    row.episode_return = episode_return;
    row.running_return = window.mean();
    row.value_error = value_error(mdp, fa_value_snapshot(mdp, rs.v, rs.phi), v_star);
    fill_params(row, params(), record.param_dim <= kMaxLoggedParams);
    record.rows.push_back(std::move(row));
  };
  try {
    emit(0, std::nan(""));
    for (std::uint64_t m = 1; m <= config.budget; ++m) {
      const EpisodeOutcome outcome = ac_fa_episode(rs, mdp);
      steps += outcome.length;
      window.push(outcome.total);
      if (should_log(m, config.log_interval, config.budget)) emit(m, outcome.total);
    }
  } catch (const std::exception& e) {
    record.failure = e.what();
  }
  record.final_values = fa_value_snapshot(mdp, rs.v, rs.phi);
  record.final_params = params();
}

void run_lfa_q(const ExperimentConfig& config, const Problem& problem, const ValueTable& v_star,
               RunRecord& record) {
  const TabularMdp& mdp = problem.mdp;
  const Algorithm algorithm = parse_algorithm(config.algorithm);
  LfaQRunState rs(mdp, *problem.action_features, critic_schedule(config), exploration_schedule(config),
                  record.objective, record.seed);
  rs.q = init_vector("init_q", config.init_q, rs.features.dim());
  rs.episode_cap = config.episode_cap;
  rs.divergence_guard = config.divergence_guard;
  record.param_dim = static_cast<std::size_t>(rs.q.size());

  auto values = [&] {
    ValueTable v = ValueTable::Zero(static_cast<Eigen::Index>(mdp.num_states()));
    for (State i : mdp.nonterminal_states()) {
      const Vector q = linear_action_values(mdp, rs.features, rs.q, i);
      v(static_cast<Eigen::Index>(i)) = q(static_cast<Eigen::Index>(greedy_action(mdp, i, q, record.objective)));
    }
    return v;
  };
  ReturnWindow window(config.window);
  auto emit = [&](std::uint64_t m, double episode_return) {
    RecordRow row;
    row.index = m;
    row.episode = m;
    row.step = rs.updates;
    row.episode_return = episode_return;
    row.running_return = window.mean();
    row.value_error = value_error(mdp, values(), v_star);
    fill_params(row, flatten({&rs.q}), record.param_dim <= kMaxLoggedParams);
    row.diverged = rs.diverged;
    record.rows.push_back(std::move(row));
  };
  try {
    emit(0, std::nan(""));
    for (std::uint64_t m = 1; m <= config.budget; ++m) {
      const EpisodeOutcome outcome =
          algorithm == Algorithm::kQLfa ? q_lfa_episode(rs, mdp) : sarsa_lfa_episode(rs, mdp);
      window.push(outcome.total);
      if (rs.diverged) {
        emit(m, outcome.total);
        break;
      }
      if (should_log(m, config.log_interval, config.budget)) emit(m, outcome.total);
    }
  } catch (const std::exception& e) {
    record.failure = e.what();
  }
  record.final_values = values();
  record.final_params = flatten({&rs.q});
}

}  // namespace

RunRecord run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const Problem problem = build_problem(config);
  validate_config(config, problem);
  RunRecord record;
  record.config = config;
  record.seed = seed;
  record.objective = resolve_objective(config);
  const Algorithm algorithm = parse_algorithm(config.algorithm);
  record.function_approximation = is_function_approximation(algorithm);
  const ValueTable v_star = value_iteration(problem.mdp, config.vi_tol, record.objective).value;
  switch (algorithm) {
    case Algorithm::kAc:
    case Algorithm::kCa:
    case Algorithm::kAcOnline:
    case Algorithm::kCaOnline: run_tabular_ac(config, problem, v_star, record); break;
    case Algorithm::kQ:
    case Algorithm::kSarsa: run_tabular_q(config, problem, v_star, record); break;
    case Algorithm::kAcFa: run_ac_fa(config, problem, v_star, record); break;
    case Algorithm::kQLfa:
    case Algorithm::kSarsaLfa: run_lfa_q(config, problem, v_star, record); break;
  }
  return record;
}

std::vector<RunRecord> run(const ExperimentConfig& config) {
  validate_config(config, build_problem(config));
  std::vector<RunRecord> records(config.seeds.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(config.threads, config.seeds.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) records[k] = run_seed(config, config.seeds[k]);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return records;
}

std::vector<RunRecord> run_and_write(const ExperimentConfig& config) {
  std::vector<RunRecord> records = run(config);
  std::filesystem::create_directories(config.output);
  std::vector<std::string> paths;
  for (const auto& record : records) {
    const std::string path = (std::filesystem::path(config.output) / ("seed_" + std::to_string(record.seed) + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(out, record);
    paths.push_back(path);
  }
  const std::string aggregate_path = (std::filesystem::path(config.output) / "aggregate.csv").string();
  std::ofstream out(aggregate_path);
  if (!out) throw std::runtime_error("cannot write '" + aggregate_path + "'");
  out << aggregate_csv(paths);
  return records;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string hex64(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string escape_comment(const std::string& text) {
  std::string out;
  for (char c : text) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
  return out;
}

}  // namespace

std::vector<std::string> csv_columns(const RunRecord& record) {
  std::vector<std::string> cols = {"index", "episode_return", "running_return", "value_error",
                                   "step",  "episode",        "param_hash"};
  if (record.function_approximation) {
    if (record.param_dim <= kMaxLoggedParams) {
      for (std::size_t k = 0; k < record.param_dim; ++k) cols.push_back("param_" + std::to_string(k));
    } else {
      cols.push_back("param_norm");
    }
    cols.push_back("diverged");
  }
  return cols;
}

void write_csv(std::ostream& out, const RunRecord& record) {
  for (const auto& [key, value] : record.config.to_key_values()) out << "# " << key << '=' << value << '\n';
  out << "# seed=" << record.seed << '\n';
  out << "# mode=" << to_string(record.objective) << '\n';
  const auto cols = csv_columns(record);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (const RecordRow& row : record.rows) {
    out << row.index << ',' << format_real(row.episode_return) << ',' << format_real(row.running_return) << ','
        << format_real(row.value_error) << ',' << row.step << ',' << row.episode << ',' << hex64(row.param_hash);
    if (record.function_approximation) {
      if (record.param_dim <= kMaxLoggedParams) {
        for (std::size_t k = 0; k < record.param_dim; ++k)
          out << ',' << (k < row.params.size() ? format_real(row.params[k]) : std::string("nan"));
      } else {
        out << ',' << format_real(row.param_norm);
      }
      out << ',' << (row.diverged ? 1 : 0);
    }
    out << '\n';
  }
  if (record.failure) out << "# error=" << escape_comment(*record.failure) << '\n';
}

std::string to_csv(const RunRecord& record) {
  std::ostringstream s;
  write_csv(s, record);
  return s.str();
}

namespace {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (table.columns.empty()) {
      table.columns = split(line, ',');
    } else {
      auto cells = split(line, ',');
      if (cells.size() != table.columns.size()) throw std::runtime_error("ragged row in '" + path + "'");
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.columns.empty() || table.columns.front() != "index")
    throw std::runtime_error("'" + path + "' is not a run CSV");
  return table;
}

}  // namespace

std::string aggregate_csv(std::span<const std::string> paths) {
  if (paths.empty()) throw std::invalid_argument("aggregate_csv: no input files");
  std::vector<CsvTable> tables;
  for (const auto& p : paths) tables.push_back(read_csv_table(p));
  const auto& columns = tables.front().columns;
  std::size_t n_rows = tables.front().rows.size();
  for (const auto& t : tables) {
    if (t.columns != columns) throw std::runtime_error("aggregate_csv: column schemas differ");
    n_rows = std::min(n_rows, t.rows.size());
  }
  std::vector<std::size_t> value_cols;
  for (std::size_t c = 1; c < columns.size(); ++c)
    if (columns[c] != "param_hash") value_cols.push_back(c);

  std::ostringstream out;
  out << "# aggregate_of=" << paths.size() << '\n';
  for (const auto& p : paths) out << "# source=" << p << '\n';
  out << "index";
  for (std::size_t c : value_cols) out << ',' << columns[c] << "_mean," << columns[c] << "_std";
  out << '\n';
  const double n = static_cast<double>(tables.size());
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::string& index = tables.front().rows[r][0];
    for (const auto& t : tables)
      if (t.rows[r][0] != index) throw std::runtime_error("aggregate_csv: index columns differ");
    out << index;
    for (std::size_t c : value_cols) {
      double sum = 0.0;
      for (const auto& t : tables) sum += parse_real(t.rows[r][c]);
      const double mean = sum / n;
      double sq = 0.0;
      for (const auto& t : tables) {
        const double d = parse_real(t.rows[r][c]) - mean;
        sq += d * d;
      }
      const double sd = tables.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
      out << ',' << format_real(mean) << ',' << format_real(sd);
    }
    out << '\n';
  }
  return out.str();
}

void print_solution(std::ostream& out, const TabularMdp& mdp, Objective objective, double tol) {
  const ValueIterationResult vi = value_iteration(mdp, tol, objective);
  out << "# objective=" << to_string(objective) << " sweeps=" << vi.sweeps << '\n';
  out << "state,value,greedy_action\n";
  for (State i : mdp.nonterminal_states()) {
    Action best = 0;
    for (Action u = 0; u < mdp.num_actions(); ++u)
      if (vi.greedy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) == 1.0) best = u;
    out << i << ',' << format_real(vi.value(static_cast<Eigen::Index>(i))) << ',' << best << '\n';
  }
}

}  // namespace ssp
