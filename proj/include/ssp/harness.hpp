#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssp/features.hpp"
#include "ssp/mdp.hpp"
#include "ssp/mdp_io.hpp"

namespace ssp {

enum class Algorithm { kAc, kCa, kAcOnline, kCaOnline, kQ, kSarsa, kAcFa, kQLfa, kSarsaLfa };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& text);
bool is_function_approximation(Algorithm algorithm);
/// Offline algorithms count steps; all others count episodes.
bool is_offline(Algorithm algorithm);

/// Raised for invalid or incompatible experiment settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value experiment description. Every field is one key; "auto"
/// values are resolved per algorithm/environment at run time.
struct ExperimentConfig {
  // environment
  std::string env = "random";  // random | frozen-lake | qlfa-counterexample | sarsa-chatter | file
  std::uint64_t env_states = 20;
  std::uint64_t env_actions = 4;
  std::uint64_t env_seed = 0;
  double env_leak = 0.05;
  std::string grid = "4x4";  // 4x4 | 8x8 | rows separated by '/'
  double slip = 2.0 / 3.0;
  std::string env_file;
  std::string features = "none";  // none | onehot (random and frozen-lake only)
  // algorithm
  std::string algorithm = "ac";
  std::string objective = "auto";  // auto | min | max
  std::string critic_schedule = "auto";
  double critic_scale = 1.0;
  double critic_exponent = 1.0;
  std::string actor_schedule = "auto";
  double actor_scale = 1.0;
  double actor_exponent = 1.0;
  std::string step_counting = "per-component";
  std::string exploration = "eps-greedy-glie";
  double explore_c = 1.0;
  double explore_temperature_c = 1.0;
  double explore_eps = 0.1;
  double temperature = 1.0;
  double theta_radius = 10.0;
  double theta_p = 20.0;
  double policy_eps = 0.0;
  std::string init_v;
  std::string init_theta;
  std::string init_q;
  bool freeze_actor = false;
  // run control
  std::uint64_t budget = 100'000;
  std::uint64_t log_interval = 1'000;
  std::uint64_t window = 10'000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output = "runs";
  std::uint64_t episode_cap = 100'000;
  double divergence_guard = 1e12;
  double vi_tol = 1e-12;
  std::uint64_t threads = 1;

  /// Keys in canonical order with their current values.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  void set(const std::string& key, const std::string& value);
  static bool is_key(const std::string& key);

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses "key=value" lines; blank lines and lines starting with '#' are skipped.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);
/// Recovers the configuration echoed in a run CSV's comment header.
ExperimentConfig config_from_csv_header(std::istream& in);
std::optional<std::uint64_t> seed_from_csv_header(std::istream& in);

/// Builds the environment described by the config (features when available).
Problem build_problem(const ExperimentConfig& config);
Objective resolve_objective(const ExperimentConfig& config);
/// Throws ConfigError before any run starts.
void validate_config(const ExperimentConfig& config, const Problem& problem);

struct RecordRow {
  std::uint64_t index = 0;  // steps for offline runs, episodes otherwise
  double episode_return = 0.0;
  double running_return = 0.0;
  double value_error = 0.0;
  std::uint64_t step = 0;
  std::uint64_t episode = 0;
  std::uint64_t param_hash = 0;
  std::vector<double> params;  // function approximation runs with dimension <= 8
  double param_norm = 0.0;
  bool diverged = false;
};

inline constexpr std::size_t kMaxLoggedParams = 8;

struct RunRecord {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  Objective objective = Objective::kMinimize;
  bool function_approximation = false;
  std::size_t param_dim = 0;
  std::vector<RecordRow> rows;
  std::optional<std::string> failure;
  double max_critic_norm = 0.0;  // sup over the run of ||V_n||_inf (tabular critics)
  ValueTable final_values;       // critic (or greedy Q) values at the end of the run
  std::vector<double> final_params;
};

/// Runs one seed. Module errors are captured in `failure`, never thrown;
/// configuration errors are thrown.
RunRecord run_seed(const ExperimentConfig& config, std::uint64_t seed);
/// Runs every seed (up to config.threads at once). Output is independent of
/// scheduling order.
std::vector<RunRecord> run(const ExperimentConfig& config);
/// run() plus seed_<s>.csv per seed and aggregate.csv in config.output.
std::vector<RunRecord> run_and_write(const ExperimentConfig& config);

std::vector<std::string> csv_columns(const RunRecord& record);
void write_csv(std::ostream& out, const RunRecord& record);
std::string to_csv(const RunRecord& record);

/// Per-index mean and sample standard deviation across per-seed CSV files, over
/// the rows present in every file. param_hash is dropped.
std::string aggregate_csv(std::span<const std::string> paths);

/// Mean of the last min(window, size) returns. Throws on empty history.
double running_return(std::span<const double> returns, std::size_t window = 10'000);
/// Euclidean distance over non-terminal states.
double value_error(const TabularMdp& mdp, const ValueTable& values, const ValueTable& reference);
/// V(i) = v^T phi(i).
ValueTable fa_value_snapshot(const TabularMdp& mdp, const Vector& v, const StateFeatures& phi);

/// Human-readable V* and greedy policy.
void print_solution(std::ostream& out, const TabularMdp& mdp, Objective objective, double tol);

}  // namespace ssp
