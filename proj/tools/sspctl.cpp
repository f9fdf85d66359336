#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ssp/harness.hpp"
#include "ssp/solvers.hpp"

namespace {

struct ConfigSource {
  std::string config_path;
  std::string csv_path;
  std::vector<std::string> overrides;
  // Seed recorded in the --from-csv header; only that seed is rerun.
  std::optional<std::uint64_t> rerun_seed;

  CLI::App* cmd = nullptr;

  // Any config key may also be given as "--key value" or "--key=value".
  void add_options(CLI::App* command, bool allow_csv) {
    cmd = command;
    cmd->allow_extras();
    cmd->footer("Every config key is also accepted as --key value.");
    cmd->add_option("-c,--config", config_path, "key=value config file");
    if (allow_csv) cmd->add_option("--from-csv", csv_path, "reuse the configuration recorded in a run CSV");
    cmd->add_option("-s,--set", overrides, "override one key, e.g. --set budget=5000")->take_all();
  }

  ssp::ExperimentConfig resolve() {
    if (!config_path.empty() && !csv_path.empty()) throw ssp::ConfigError("--config and --from-csv are exclusive");
    ssp::ExperimentConfig config;
    if (!config_path.empty()) config = ssp::load_config(config_path);
    if (!csv_path.empty()) {
      std::ifstream in(csv_path);
      if (!in) throw ssp::ConfigError("cannot open '" + csv_path + "'");
      config = ssp::config_from_csv_header(in);
      std::ifstream again(csv_path);
      rerun_seed = ssp::seed_from_csv_header(again);
      if (!rerun_seed) throw ssp::ConfigError("'" + csv_path + "' records no seed");
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ssp::ConfigError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const std::vector<std::string> extras = cmd->remaining();
    for (std::size_t k = 0; k < extras.size(); ++k) {
      const std::string& arg = extras[k];
      if (arg.rfind("--", 0) != 0) throw ssp::ConfigError("unexpected argument '" + arg + "'");
      std::string key = arg.substr(2);
      std::string value;
      if (const auto eq = key.find('='); eq != std::string::npos) {
        value = key.substr(eq + 1);
        key.resize(eq);
      } else if (k + 1 < extras.size()) {
        value = extras[++k];
      } else {
        throw ssp::ConfigError("missing value for --" + key);
      }
      std::replace(key.begin(), key.end(), '-', '_');
      config.set(key, value);
    }
    return config;
  }
};

int cmd_solve(const ssp::ExperimentConfig& config) {
  const ssp::Problem problem = ssp::build_problem(config);
  ssp::validate(problem.mdp);
  ssp::print_solution(std::cout, problem.mdp, ssp::resolve_objective(config), config.vi_tol);
  return 0;
}

int cmd_validate(const ssp::ExperimentConfig& config) {
  const ssp::Problem problem = ssp::build_problem(config);
  ssp::validate_config(config, problem);
  const auto& mdp = problem.mdp;
  std::cout << "states=" << mdp.num_states() << " actions=" << mdp.num_actions() << " terminal=" << mdp.terminal()
            << '\n';
  try {
    const auto cert = ssp::auxiliary_certificate(mdp);
    std::cout << "beta=" << ssp::format_real(cert.beta) << " max_xi=" << ssp::format_real(cert.xi.maxCoeff()) << '\n';
  } catch (const ssp::ModelError& e) {
    // Grids admit policies that never terminate; learning still works there.
    std::cout << "certificate unavailable: " << e.what() << '\n';
  }
  std::cout << "uniform_policy_probe="
            << ssp::format_real(ssp::properness_probe(mdp, ssp::uniform_policy(mdp))) << '\n';
  std::cout << "ok\n";
  return 0;
}

// Rewrites one seed's CSV; the seeds key stays as recorded so the file is
// reproduced byte for byte.
int cmd_rerun(const ssp::ExperimentConfig& config, std::uint64_t seed) {
  const auto record = ssp::run_seed(config, seed);
  std::filesystem::create_directories(config.output);
  const auto path = std::filesystem::path(config.output) / ("seed_" + std::to_string(seed) + ".csv");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  ssp::write_csv(out, record);
  std::cout << "seed " << seed << ": " << record.rows.size() << " rows";
  if (record.failure) std::cout << ", failed: " << *record.failure;
  std::cout << "\nwrote " << path.string() << '\n';
  return record.failure ? 3 : 0;
}

int cmd_run(const ssp::ExperimentConfig& config) {
  const auto records = ssp::run_and_write(config);
  int status = 0;
  for (const auto& r : records) {
    std::cout << "seed " << r.seed << ": " << r.rows.size() << " rows";
    if (r.failure) {
      std::cout << ", failed: " << *r.failure;
      status = 3;
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << config.output << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic shortest path solvers and learners"};
  app.require_subcommand(1);

  ConfigSource solve_src, validate_src, run_src, export_src;
  auto* solve = app.add_subcommand("solve", "print V* and a greedy optimal policy");
  solve_src.add_options(solve, false);
  auto* validate = app.add_subcommand("validate", "check an environment and configuration");
  validate_src.add_options(validate, false);
  std::string mdp_file;
  validate->add_option("--mdp", mdp_file, "MDP file in the text format (same as --env file --env-file PATH)");
  auto* run = app.add_subcommand("run", "run an experiment and write per-seed CSV files");
  run_src.add_options(run, true);
  std::string output;
  run->add_option("-o,--output", output, "output directory (overrides the output key)");

  auto* exp = app.add_subcommand("export", "write the configured environment in the text MDP format");
  export_src.add_options(exp, false);
  std::string export_path;
  exp->add_option("-o,--output", export_path, "destination file")->required();

  auto* agg = app.add_subcommand("aggregate", "mean and standard deviation across per-seed CSV files");
  std::vector<std::string> inputs;
  std::string agg_out;
  agg->add_option("files", inputs, "per-seed CSV files")->required();
  agg->add_option("-o,--output", agg_out, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_src.resolve());
    if (validate->parsed()) {
      auto config = validate_src.resolve();
      if (!mdp_file.empty()) {
        config.env = "file";
        config.env_file = mdp_file;
      }
      return cmd_validate(config);
    }
    if (run->parsed()) {
      auto config = run_src.resolve();
      if (!output.empty()) config.output = output;
      if (run_src.rerun_seed) return cmd_rerun(config, *run_src.rerun_seed);
      return cmd_run(config);
    }
    if (exp->parsed()) {
      ssp::save_problem(export_path, ssp::build_problem(export_src.resolve()));
      return 0;
    }
    if (agg->parsed()) {
      const std::string text = ssp::aggregate_csv(inputs);
      if (agg_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(agg_out);
        if (!out) throw std::runtime_error("cannot write '" + agg_out + "'");
        out << text;
      }
      return 0;
    }
  } catch (const ssp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
