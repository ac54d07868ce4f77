// SPDX-License-Identifier: Apache-2.0
//
// Scenario ingestion (JSON with dB conveniences and optional random user
// generation) and run artifacts (JSON summary plus plot-ready CSV tables),
// written atomically.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavnet/types.hpp"

namespace uavnet::io {

struct GenerationSpec {
  int count = 0;
  std::array<double, 4> region{-1000.0, -1000.0, 1000.0, 1000.0};  // xmin ymin xmax ymax
  uint64_t seed = 0;
};

// A scenario document: the resolved instance plus the generation block, kept
// so seed overrides can re-draw the users.
struct ScenarioFile {
  Scenario<double> scenario;
  std::optional<GenerationSpec> generation;
};

// Thrown on malformed documents; carries the offending field when known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

Points<double> generate_users(const GenerationSpec& spec);

ScenarioFile load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const ScenarioFile& file);

// Everything cmd_solve persists for one run.
struct RunOutput {
  std::string scheme;
  std::optional<uint64_t> seed;
  double eta = 0.0;          // binary solution min-rate at sub-slot resolution
  double eta_relaxed = 0.0;  // relaxed objective from the final scheduling LP
  std::vector<double> per_user_rates;  // binary solution averages
  int iterations = 0;
  bool converged = false;
  int trajectory_warnings = 0;
  int power_warnings = 0;
  double period = 0.0;
  int num_users = 0;
  int num_uavs = 0;
  int num_slots = 0;
  int subslot_factor = 1;

  Trajectory<double> trajectory;     // N waypoints
  PowerProfile<double> power;        // N slots
  Schedule<double> binary_schedule;  // N * subslot_factor sub-slots, binary
  std::vector<double> trace;         // relaxed objective per iteration
};

void write_run_output(const std::filesystem::path& dir, const RunOutput& output);
RunOutput load_run_output(const std::filesystem::path& dir);

// dB conveniences used at the file boundary only.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace uavnet::io

namespace uavnet::cli {

struct SolveOptions {
  std::string scenario_path;
  std::string scheme = "joint";
  std::string out_dir;
  std::optional<double> period;
  std::optional<int> uavs;
  std::optional<uint64_t> seed;
  std::optional<int> max_iters;
  std::optional<double> eps;
};

struct SweepOptions {
  std::string scenario_path;
  std::string param = "period";  // or "num_uavs"
  std::vector<double> values;
  std::vector<std::string> schemes;
  std::string out_dir;
  std::optional<int> max_iters;
  int jobs = 0;  // 0 = hardware concurrency
};

struct ValidateOptions {
  std::string scenario_path;
  std::string run_dir;
};

// Exit codes shared by the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitIo = 4;

int cmd_solve(const SolveOptions& options, std::ostream& log);
int cmd_sweep(const SweepOptions& options, std::ostream& log);
int cmd_validate(const ValidateOptions& options, std::ostream& log);

}  // namespace uavnet::cli
