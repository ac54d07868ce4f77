// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: solve one scenario, sweep a parameter across
// schemes, or re-validate a run directory against its scenario.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uavnet/io.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV downlink max-min rate planner"};
  app.require_subcommand(1);

  uavnet::cli::SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run one scheme on a scenario");
  solve_cmd->add_option("--scenario", solve.scenario_path, "Scenario JSON file")->required();
  solve_cmd->add_option("--scheme", solve.scheme,
                        "joint | no_power_control | circular_full_power | static | orthogonal");
  solve_cmd->add_option("--out", solve.out_dir, "Output directory")->required();
  double period = 0;
  int uavs = 0;
  std::uint64_t seed = 0;
  int max_iters = 0;
  double eps = 0;
  auto* opt_period = solve_cmd->add_option("--period", period, "Override the period (seconds)");
  auto* opt_uavs = solve_cmd->add_option("--uavs", uavs, "Override the UAV count");
  auto* opt_seed = solve_cmd->add_option("--seed", seed, "Override the user-generation seed");
  auto* opt_iters = solve_cmd->add_option("--max-iters", max_iters, "Iteration cap");
  auto* opt_eps = solve_cmd->add_option("--eps", eps, "Convergence threshold override");

  uavnet::cli::SweepOptions sweep;
  std::string sweep_values, sweep_schemes;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run schemes across parameter values");
  sweep_cmd->add_option("--scenario", sweep.scenario_path, "Scenario JSON file")->required();
  sweep_cmd->add_option("--param", sweep.param, "period | num_uavs");
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated ascending values")->required();
  sweep_cmd->add_option("--schemes", sweep_schemes, "Comma-separated scheme names")->required();
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->required();
  int sweep_iters = 0;
  auto* sweep_opt_iters = sweep_cmd->add_option("--max-iters", sweep_iters, "Iteration cap");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (default: hardware)");

  uavnet::cli::ValidateOptions validate;
  auto* validate_cmd = app.add_subcommand("validate", "Re-check a run directory");
  validate_cmd->add_option("--scenario", validate.scenario_path, "Scenario JSON file")
      ->required();
  validate_cmd->add_option("--run", validate.run_dir, "Run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (solve_cmd->parsed()) {
    if (*opt_period) solve.period = period;
    if (*opt_uavs) solve.uavs = uavs;
    if (*opt_seed) solve.seed = seed;
    if (*opt_iters) solve.max_iters = max_iters;
    if (*opt_eps) solve.eps = eps;
    return uavnet::cli::cmd_solve(solve, std::cout);
  }
  if (sweep_cmd->parsed()) {
    sweep.values = parse_values(sweep_values);
    sweep.schemes = parse_names(sweep_schemes);
    if (*sweep_opt_iters) sweep.max_iters = sweep_iters;
    return uavnet::cli::cmd_sweep(sweep, std::cout);
  }
  return uavnet::cli::cmd_validate(validate, std::cout);
}
