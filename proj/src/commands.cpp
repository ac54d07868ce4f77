// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "uavnet/baselines.hpp"
#include "uavnet/io.hpp"
#include "uavnet/planner.hpp"

namespace uavnet::cli {

namespace {

namespace bl = uavnet::baselines;
namespace pl = uavnet::planner;

// Positions repeated over each slot's sub-slots: the rate accounting that
// matches the within-slot frozen channel used by the relaxed problem.
Trajectory<double> repeat_trajectory(const Trajectory<double>& traj, int tau) {
  Trajectory<double> out(traj.num_uavs(), traj.num_slots() * tau);
  for (int n = 0; n < traj.num_slots(); ++n) {
    for (int t = 0; t < tau; ++t) {
      out.x.col(n * tau + t) = traj.x.col(n);
      out.y.col(n * tau + t) = traj.y.col(n);
    }
  }
  return out;
}

struct PreparedScenario {
  Scenario<double> scenario;
  std::optional<uint64_t> seed;
};

// Apply CLI overrides; a new period rescales the slot count proportionally
// so the discretization accuracy is preserved.
PreparedScenario apply_overrides(const io::ScenarioFile& file, std::optional<double> period,
                                 std::optional<int> uavs, std::optional<uint64_t> seed) {
  PreparedScenario prep;
  prep.scenario = file.scenario;
  if (file.generation) prep.seed = file.generation->seed;
  if (seed) {
    if (!file.generation) {
      throw std::invalid_argument("--seed requires a scenario with a user_generation block");
    }
    io::GenerationSpec spec = *file.generation;
    spec.seed = *seed;
    prep.scenario.user_positions = io::generate_users(spec);
    prep.seed = *seed;
  }
  if (uavs) prep.scenario.num_uavs = *uavs;
  if (period) {
    // Keep the configured slot count unless the accuracy bound forces more.
    prep.scenario.period = *period;
    prep.scenario.num_slots = std::max(
        prep.scenario.num_slots,
        min_slots_for_accuracy(prep.scenario.max_speed, prep.scenario.period,
                               prep.scenario.altitude,
                               prep.scenario.discretization_threshold));
  }
  prep.scenario.validate();
  return prep;
}

struct SchemeRun {
  pl::SolveReport<double> report;
  io::RunOutput output;
};

SchemeRun execute_scheme(const Scenario<double>& scn, bl::SchemeId scheme,
                         std::optional<uint64_t> seed, std::optional<int> max_iters,
                         std::optional<double> eps) {
  pl::BcdConfig<double> config;
  config.convergence_threshold = eps.value_or(scn.convergence_threshold);
  config.max_iterations = max_iters.value_or(100);

  SchemeRun run;
  run.report = bl::run_scheme(scn, scheme, config);
  if (run.report.aborted) {
    throw std::runtime_error("solver aborted: " + run.report.abort_reason);
  }

  const int tau = scn.subslot_factor;
  auto& out = run.output;
  out.scheme = bl::scheme_name(scheme);
  out.seed = seed;
  out.eta_relaxed = run.report.final_objective;
  out.iterations = run.report.iterations;
  out.converged = run.report.converged;
  out.trajectory_warnings = run.report.trajectory_warnings;
  out.power_warnings = run.report.power_warnings;
  out.period = scn.period;
  out.num_users = scn.num_users();
  out.num_uavs = scn.num_uavs;
  out.num_slots = scn.num_slots;
  out.subslot_factor = tau;
  out.trajectory = run.report.trajectory;
  out.power = run.report.power;
  out.trace.assign(run.report.objective_trace.begin(), run.report.objective_trace.end());

  out.binary_schedule = pl::reconstruct_binary_schedule(run.report.schedule, tau);
  const auto fine = evaluate_rates(pl::subslot_scenario(scn, tau), out.binary_schedule,
                                   repeat_trajectory(run.report.trajectory, tau),
                                   pl::expand_power(run.report.power, tau));
  out.eta = fine.min_rate;
  out.per_user_rates.assign(fine.average_rates.data(),
                            fine.average_rates.data() + fine.average_rates.size());
  return run;
}

}  // namespace

int cmd_solve(const SolveOptions& options, std::ostream& log) {
  io::ScenarioFile file;
  try {
    file = io::load_scenario(options.scenario_path);
  } catch (const io::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    const auto prep = apply_overrides(file, options.period, options.uavs, options.seed);
    const auto scheme = bl::parse_scheme(options.scheme);
    const auto run =
        execute_scheme(prep.scenario, scheme, prep.seed, options.max_iters, options.eps);
    io::write_run_output(options.out_dir, run.output);
    log << "scheme=" << run.output.scheme << " eta=" << run.output.eta
        << " eta_relaxed=" << run.output.eta_relaxed << " iterations=" << run.output.iterations
        << " converged=" << (run.output.converged ? "yes" : "no") << "\n";
    return run.output.converged ? kExitOk : kExitNotConverged;
  } catch (const io::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitNotConverged;
  }
}

int cmd_sweep(const SweepOptions& options, std::ostream& log) {
  io::ScenarioFile file;
  try {
    file = io::load_scenario(options.scenario_path);
  } catch (const io::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (options.param != "period" && options.param != "num_uavs") {
    log << "error: sweep parameter must be 'period' or 'num_uavs'\n";
    return kExitValidation;
  }
  if (options.values.empty() || options.schemes.empty()) {
    log << "error: sweep needs at least one value and one scheme\n";
    return kExitValidation;
  }
  if (!std::is_sorted(options.values.begin(), options.values.end())) {
    log << "error: sweep values must be sorted ascending\n";
    return kExitValidation;
  }

  struct Row {
    std::string scheme;
    double value;
    double eta = 0;
    int iterations = 0;
    double wall_time = 0;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (const auto& scheme : options.schemes) {
    for (double value : options.values) {
      rows.push_back({scheme, value});
    }
  }

  const int hardware = static_cast<int>(std::thread::hardware_concurrency());
  const int jobs = options.jobs > 0 ? options.jobs : std::max(1, hardware);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= rows.size()) return;
      Row& row = rows[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        std::optional<double> period;
        std::optional<int> uavs;
        if (options.param == "period") {
          period = row.value;
        } else {
          uavs = static_cast<int>(row.value);
        }
        const auto prep = apply_overrides(file, period, uavs, std::nullopt);
        const auto run = execute_scheme(prep.scenario, bl::parse_scheme(row.scheme), prep.seed,
                                        options.max_iters, std::nullopt);
        row.eta = run.output.eta;
        row.iterations = run.output.iterations;
        if (!run.output.converged) row.status = "not_converged";
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min<int>(jobs, static_cast<int>(rows.size())); ++j) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(options.out_dir);
  std::ostringstream os;
  os << "scheme,value,eta,iterations,wall_time_s,status\n";
  for (const auto& row : rows) {
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << row.scheme << ',' << row.value << ',' << std::setprecision(17) << row.eta << ','
       << row.iterations << ',' << row.wall_time << ',' << status << "\n";
    log << row.scheme << " " << options.param << "=" << row.value << " eta=" << row.eta << " ("
        << status << ")\n";
  }
  const auto path = std::filesystem::path(options.out_dir) / "sweep.csv";
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << os.str();
  }
  std::filesystem::rename(tmp, path);

  for (const auto& row : rows) {
    if (row.status != "ok") return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_validate(const ValidateOptions& options, std::ostream& log) {
  io::ScenarioFile file;
  io::RunOutput run;
  try {
    file = io::load_scenario(options.scenario_path);
    run = io::load_run_output(options.run_dir);
  } catch (const io::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  const auto& scn = file.scenario;
  bool all_ok = true;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    log << (ok ? "PASS " : "FAIL ") << name;
    if (!ok && !detail.empty()) log << " (" << detail << ")";
    log << "\n";
    all_ok = all_ok && ok;
  };

  if (run.num_users != scn.num_users() || run.num_uavs != scn.num_uavs ||
      run.num_slots != scn.num_slots) {
    log << "error: run artifacts do not match the scenario dimensions\n";
    return kExitValidation;
  }

  // Slot-level trajectory and power constraints.
  Schedule<double> empty(scn.num_users(), scn.num_uavs, scn.num_slots);
  const auto coarse = validate_feasibility(scn, empty, run.trajectory, run.power);
  std::vector<ConstraintKind> kinds = {
      ConstraintKind::trajectory_periodicity, ConstraintKind::trajectory_speed,
      ConstraintKind::trajectory_separation, ConstraintKind::power_box};
  for (auto kind : kinds) {
    std::string detail;
    int count = 0;
    for (const auto& v : coarse) {
      if (v.kind != kind) continue;
      if (count == 0) detail = v.describe();
      ++count;
    }
    if (count > 1) detail += " +" + std::to_string(count - 1) + " more";
    check(constraint_kind_name(kind), count == 0, detail);
  }

  // Sub-slot schedule constraints.
  const int tau = run.subslot_factor;
  const auto scn_fine = planner::subslot_scenario(scn, tau);
  const auto traj_fine = repeat_trajectory(run.trajectory, tau);
  const auto power_fine = planner::expand_power(run.power, tau);
  const auto fine_violations =
      validate_feasibility(scn_fine, run.binary_schedule, traj_fine, power_fine);
  std::string sched_detail;
  int sched_count = 0;
  for (const auto& v : fine_violations) {
    if (v.kind == ConstraintKind::schedule_bounds || v.kind == ConstraintKind::schedule_binary ||
        v.kind == ConstraintKind::schedule_uav_sum ||
        v.kind == ConstraintKind::schedule_user_sum) {
      if (sched_count == 0) sched_detail = v.describe();
      ++sched_count;
    }
  }
  check("schedule_constraints", sched_count == 0, sched_detail);

  // Rate re-evaluation reproduces the summary.
  const auto rates = evaluate_rates(scn_fine, run.binary_schedule, traj_fine, power_fine);
  const double err = std::abs(rates.min_rate - run.eta);
  check("rate_reevaluation", err <= 1e-9 * std::max(1.0, std::abs(run.eta)),
        "eta recomputed as " + std::to_string(rates.min_rate));

  return all_ok ? kExitOk : kExitValidation;
}

}  // namespace uavnet::cli
