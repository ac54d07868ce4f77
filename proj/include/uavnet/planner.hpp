// SPDX-License-Identifier: Apache-2.0
//
// Coordinate-descent driver: circular/circle-packing initialization, the
// scheduling -> trajectory -> power loop with monotone objective trace, and
// reconstruction of a binary schedule on sub-slots.

#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/model.hpp"
#include "uavnet/power.hpp"
#include "uavnet/scheduling.hpp"
#include "uavnet/trajectory.hpp"
#include "uavnet/types.hpp"

namespace uavnet::planner {

template <typename Scalar>
struct BcdConfig {
  Scalar convergence_threshold = Scalar(1e-4);  // fractional objective increase
  int max_iterations = 100;
  bool optimize_trajectory = true;
  bool optimize_power = true;
  // Optional per-(UAV, slot) transmission mask and power caps; empty means
  // every UAV active with cap P_max.
  ActiveMask active_mask;
  Matrix<Scalar> power_upper;
  convex::SmoothSettings<Scalar> smooth;
  convex::LpSettings<Scalar> lp;

  void validate() const {
    if (!(convergence_threshold > Scalar(0))) {
      throw std::invalid_argument("bcd config: convergence_threshold must be > 0");
    }
    if (max_iterations < 1) {
      throw std::invalid_argument("bcd config: max_iterations must be >= 1");
    }
  }
};

template <typename Scalar>
struct BlockObjectives {
  Scalar after_scheduling = Scalar(0);
  Scalar after_trajectory = Scalar(0);
  Scalar after_power = Scalar(0);
};

template <typename Scalar>
struct SolveReport {
  std::vector<Scalar> objective_trace;  // scheduling LP value per iteration
  std::vector<BlockObjectives<Scalar>> block_objectives;
  Schedule<Scalar> schedule;
  Trajectory<Scalar> trajectory;
  PowerProfile<Scalar> power;
  Scalar final_objective = Scalar(0);
  bool converged = false;
  bool aborted = false;
  std::string abort_reason;
  int iterations = 0;
  int trajectory_warnings = 0;
  int power_warnings = 0;
  double scheduling_seconds = 0;
  double trajectory_seconds = 0;
  double power_seconds = 0;
};

template <typename Scalar>
struct InitTrajectorySpec {
  Vector2<Scalar> center;           // geometric center of the users
  Scalar cover_radius = Scalar(0);  // r_u after any feasibility rescaling
  Scalar packing_radius = Scalar(0);
  Points<Scalar> circle_centers;    // 2 x M
  Scalar speed_limit_radius = Scalar(0);     // V_max T / (2 pi)
  Scalar discrete_limit_radius = Scalar(0);  // chord-feasible cap for N waypoints
  Scalar radius = Scalar(0);                 // trajectory circle radius
  Vector<Scalar> angles;                     // theta_n
};

namespace detail {

// Optimal ratios r_cp / r_u for packing M equal circles in a circle,
// with centers on a ring around the cover center (exact for M <= 5).
template <typename Scalar>
Scalar packing_ratio(int num_uavs) {
  switch (num_uavs) {
    case 1: return Scalar(1);
    case 2: return Scalar(0.5);
    case 3: return Scalar(2) * std::sqrt(Scalar(3)) - Scalar(3);
    case 4: return std::sqrt(Scalar(2)) - Scalar(1);
    case 5: {
      const Scalar s = std::sqrt(Scalar(2) * (Scalar(1) + Scalar(1) / std::sqrt(Scalar(5))));
      return Scalar(1) / (Scalar(1) + s);
    }
    default:
      throw std::invalid_argument(
          "trajectory initialization supports at most 5 UAVs (circle packing table)");
  }
}

template <typename Scalar>
Points<Scalar> packing_centers(const Vector2<Scalar>& center, Scalar cover_radius,
                               Scalar packing_radius, int num_uavs) {
  Points<Scalar> out(2, num_uavs);
  if (num_uavs == 1) {
    out.col(0) = center;
    return out;
  }
  const Scalar ring = cover_radius - packing_radius;
  for (int m = 0; m < num_uavs; ++m) {
    const Scalar phi = Scalar(2) * Scalar(M_PI) * Scalar(m) / Scalar(num_uavs);
    out.col(m) = center + ring * Vector2<Scalar>(std::cos(phi), std::sin(phi));
  }
  return out;
}

template <typename Scalar>
Trajectory<Scalar> circles_from_spec(const InitTrajectorySpec<Scalar>& spec, int num_slots) {
  Trajectory<Scalar> traj(static_cast<int>(spec.circle_centers.cols()), num_slots);
  for (int m = 0; m < traj.num_uavs(); ++m) {
    for (int n = 0; n < num_slots; ++n) {
      traj.x(m, n) = spec.circle_centers(0, m) + spec.radius * std::cos(spec.angles(n));
      traj.y(m, n) = spec.circle_centers(1, m) + spec.radius * std::sin(spec.angles(n));
    }
    // theta_{N-1} = 2 pi: pin the endpoint so periodicity is bitwise exact.
    traj.x(m, num_slots - 1) = traj.x(m, 0);
    traj.y(m, num_slots - 1) = traj.y(m, 0);
  }
  return traj;
}

template <typename Scalar>
bool separation_ok(const Trajectory<Scalar>& traj, Scalar d_min) {
  for (int n = 0; n < traj.num_slots(); ++n) {
    for (int m = 0; m < traj.num_uavs(); ++m) {
      for (int j = m + 1; j < traj.num_uavs(); ++j) {
        if ((traj.waypoint(m, n) - traj.waypoint(j, n)).norm() < d_min) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

// Circular trajectories around circle-packed centers inside the user cover
// disk. The circle radius honors both the continuous-time speed cap and the
// discrete chord cap (N-1 hops of at most S_max each).
template <typename Scalar>
std::pair<Trajectory<Scalar>, InitTrajectorySpec<Scalar>> init_circular_trajectories(
    const Scenario<Scalar>& scn) {
  const int num_m = scn.num_uavs;
  const int num_n = scn.num_slots;
  InitTrajectorySpec<Scalar> spec;
  spec.center = scn.user_positions.rowwise().mean();
  spec.cover_radius =
      (scn.user_positions.colwise() - spec.center).colwise().norm().maxCoeff();

  const Scalar ratio = detail::packing_ratio<Scalar>(num_m);
  spec.packing_radius = ratio * spec.cover_radius;
  spec.circle_centers =
      detail::packing_centers(spec.center, spec.cover_radius, spec.packing_radius, num_m);

  spec.speed_limit_radius = scn.max_speed * scn.period / (Scalar(2) * Scalar(M_PI));
  // Waypoints hop along chords of 2 r sin(pi/(N-1)); keep them under S_max.
  spec.discrete_limit_radius =
      num_n >= 3 ? scn.max_step() / (Scalar(2) * std::sin(Scalar(M_PI) / Scalar(num_n - 1))) *
                       (Scalar(1) - Scalar(1e-9))
                 : spec.speed_limit_radius;
  spec.radius = std::min({spec.speed_limit_radius, spec.discrete_limit_radius,
                          spec.packing_radius / Scalar(2)});
  spec.angles.resize(num_n);
  for (int n = 0; n < num_n; ++n) {
    spec.angles(n) = Scalar(2) * Scalar(M_PI) * Scalar(n) / Scalar(num_n - 1);
  }

  Trajectory<Scalar> traj = detail::circles_from_spec(spec, num_n);
  if (num_m >= 2 && !detail::separation_ok(traj, scn.min_separation)) {
    // Feasibility repair: grow the cover disk until the packed circles are
    // at least d_min in radius (their centers then sit 2 d_min apart).
    spec.cover_radius = scn.min_separation / ratio;
    spec.packing_radius = scn.min_separation;
    spec.circle_centers =
        detail::packing_centers(spec.center, spec.cover_radius, spec.packing_radius, num_m);
    spec.radius = std::min({spec.speed_limit_radius, spec.discrete_limit_radius,
                            spec.packing_radius / Scalar(2)});
    traj = detail::circles_from_spec(spec, num_n);
    if (!detail::separation_ok(traj, scn.min_separation)) {
      throw std::invalid_argument(
          "trajectory initialization: separation repair failed (d_min too large?)");
    }
  }
  return {traj, spec};
}

// Block coordinate descent: scheduling LP, trajectory step, power step, with
// the scheduling value as the convergence measure. The loop always ends on a
// fresh scheduling solve so the reported triple is mutually consistent.
template <typename Scalar>
SolveReport<Scalar> run_bcd(const Scenario<Scalar>& scn, const BcdConfig<Scalar>& config,
                            const Trajectory<Scalar>& initial_trajectory,
                            const PowerProfile<Scalar>& initial_power) {
  using clock = std::chrono::steady_clock;
  config.validate();

  const ActiveMask mask = config.active_mask.size() > 0
                              ? config.active_mask
                              : full_mask(scn.num_uavs, scn.num_slots);
  const Matrix<Scalar> power_ub =
      config.power_upper.size() > 0
          ? config.power_upper
          : Matrix<Scalar>::Constant(scn.num_uavs, scn.num_slots, scn.max_power);

  SolveReport<Scalar> report;
  report.trajectory = initial_trajectory;
  report.power = initial_power;

  Scalar previous = Scalar(0);
  for (int it = 0; it < config.max_iterations; ++it) {
    try {
      const auto t0 = clock::now();
      const auto problem =
          scheduling::build_problem(scn, report.trajectory, report.power, mask);
      const auto sol = scheduling::solve(problem, config.lp);
      report.scheduling_seconds += std::chrono::duration<double>(clock::now() - t0).count();

      report.schedule = sol.schedule;
      report.objective_trace.push_back(sol.eta);
      report.iterations = it + 1;
      BlockObjectives<Scalar> blocks;
      blocks.after_scheduling = sol.eta;
      blocks.after_trajectory = sol.eta;
      blocks.after_power = sol.eta;

      if (it > 0) {
        const Scalar increase = sol.eta - previous;
        if (increase <= config.convergence_threshold *
                            std::max(std::abs(previous), Scalar(1e-12))) {
          report.block_objectives.push_back(blocks);
          report.converged = true;
          break;
        }
      }
      previous = sol.eta;
      if (it + 1 >= config.max_iterations) {
        report.block_objectives.push_back(blocks);
        break;
      }

      if (config.optimize_trajectory) {
        const auto t1 = clock::now();
        trajectory::TrajectoryLocalPoint<Scalar> local{report.trajectory, report.schedule,
                                                       report.power};
        const auto step = trajectory::solve_block(scn, local, config.smooth);
        report.trajectory_seconds +=
            std::chrono::duration<double>(clock::now() - t1).count();
        report.trajectory = step.trajectory;
        blocks.after_trajectory = step.eta;
        blocks.after_power = step.eta;
        if (step.warning) ++report.trajectory_warnings;
      }
      if (config.optimize_power) {
        const auto t2 = clock::now();
        power::PowerLocalPoint<Scalar> local{report.power, report.schedule, report.trajectory};
        const auto step = power::solve_block(scn, local, power_ub, config.smooth);
        report.power_seconds += std::chrono::duration<double>(clock::now() - t2).count();
        report.power = step.power;
        blocks.after_power = step.eta;
        if (step.warning) ++report.power_warnings;
      }
      report.block_objectives.push_back(blocks);
    } catch (const std::exception& e) {
      report.aborted = true;
      report.abort_reason = e.what();
      break;
    }
  }
  if (!report.objective_trace.empty()) report.final_objective = report.objective_trace.back();
  return report;
}

namespace detail {

// Sub-slot coloring state for one time slot: which user a UAV serves in each
// sub-slot and which UAV serves a user.
struct SlotColoring {
  std::vector<std::vector<int>> user_at;  // [m][t] -> user or -1
  std::vector<std::vector<int>> uav_at;   // [k][t] -> uav or -1

  SlotColoring(int num_k, int num_m, int tau)
      : user_at(num_m, std::vector<int>(tau, -1)), uav_at(num_k, std::vector<int>(tau, -1)) {}

  bool free_for_uav(int m, int t) const { return user_at[m][t] < 0; }
  bool free_for_user(int k, int t) const { return uav_at[k][t] < 0; }

  void place(int k, int m, int t) {
    user_at[m][t] = k;
    uav_at[k][t] = m;
  }

  // Swap colors c1/c2 along the alternating chain starting at user k. User k
  // misses c2, so the chain is a path: user->UAV edges carry c1, UAV->user
  // edges carry c2. In a bipartite graph the path cannot reach a UAV whose
  // c1 is free, so after the swap c1 is free at k and still free at the
  // target UAV.
  void kempe_swap(int k, int c1, int c2) {
    std::vector<std::pair<int, int>> on_c1, on_c2;  // (user, uav)
    int user = k;
    while (true) {
      const int m = uav_at[user][c1];
      if (m < 0) break;
      on_c1.emplace_back(user, m);
      const int next_user = user_at[m][c2];
      if (next_user < 0) break;
      on_c2.emplace_back(next_user, m);
      user = next_user;
    }
    for (const auto& [u, m] : on_c1) {
      uav_at[u][c1] = -1;
      user_at[m][c1] = -1;
    }
    for (const auto& [u, m] : on_c2) {
      uav_at[u][c2] = -1;
      user_at[m][c2] = -1;
    }
    for (const auto& [u, m] : on_c1) {
      uav_at[u][c2] = m;
      user_at[m][c2] = u;
    }
    for (const auto& [u, m] : on_c2) {
      uav_at[u][c1] = m;
      user_at[m][c1] = u;
    }
  }
};

// Largest-remainder correction: while the group total exceeds tau, decrement
// the entry with the largest rounding gain (ties toward the lowest index).
inline void shave_overflow(std::vector<int>& counts, const std::vector<double>& exact, int tau) {
  int total = 0;
  for (int c : counts) total += c;
  while (total > tau) {
    int best = -1;
    double best_gain = -1e300;
    for (size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      const double gain = counts[i] - exact[i];
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best = static_cast<int>(i);
      }
    }
    --counts[best];
    --total;
  }
}

}  // namespace detail

// Round the relaxed weights to sub-slot counts (nearest integer of tau*alpha,
// overflow corrected per UAV and per user), then arrange them into tau
// sub-slots per slot so that every sub-slot is a partial matching.
template <typename Scalar>
Schedule<Scalar> reconstruct_binary_schedule(const Schedule<Scalar>& relaxed, int tau) {
  if (tau < 1) throw std::domain_error("reconstruct_binary_schedule: tau must be >= 1");
  const int num_k = relaxed.num_users();
  const int num_m = relaxed.num_uavs();
  const int num_n = relaxed.num_slots();

  Schedule<Scalar> binary(num_k, num_m, num_n * tau, ScheduleMode::binary);
  for (int n = 0; n < num_n; ++n) {
    const auto& w = relaxed.weights[n];

    // Counts with per-UAV then per-user largest-remainder correction.
    Matrix<Scalar> exact = Scalar(tau) * w;
    std::vector<std::vector<int>> counts(num_k, std::vector<int>(num_m, 0));
    for (int k = 0; k < num_k; ++k) {
      for (int m = 0; m < num_m; ++m) {
        counts[k][m] = static_cast<int>(std::lround(static_cast<double>(exact(k, m))));
      }
    }
    for (int m = 0; m < num_m; ++m) {
      std::vector<int> col(num_k);
      std::vector<double> col_exact(num_k);
      for (int k = 0; k < num_k; ++k) {
        col[k] = counts[k][m];
        col_exact[k] = static_cast<double>(exact(k, m));
      }
      detail::shave_overflow(col, col_exact, tau);
      for (int k = 0; k < num_k; ++k) counts[k][m] = col[k];
    }
    for (int k = 0; k < num_k; ++k) {
      std::vector<double> row_exact(num_m);
      for (int m = 0; m < num_m; ++m) row_exact[m] = static_cast<double>(exact(k, m));
      detail::shave_overflow(counts[k], row_exact, tau);
    }

    // Contiguous placement per UAV, users in descending-count order; user
    // conflicts across UAVs are resolved by alternating-chain swaps.
    detail::SlotColoring coloring(num_k, num_m, tau);
    for (int m = 0; m < num_m; ++m) {
      std::vector<int> order;
      for (int k = 0; k < num_k; ++k) {
        if (counts[k][m] > 0) order.push_back(k);
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return counts[a][m] > counts[b][m]; });
      int cursor = 0;
      for (int k : order) {
        for (int copy = 0; copy < counts[k][m]; ++copy) {
          int slot = -1;
          for (int probe = 0; probe < tau; ++probe) {
            const int t = (cursor + probe) % tau;
            if (coloring.free_for_uav(m, t) && coloring.free_for_user(k, t)) {
              slot = t;
              break;
            }
          }
          if (slot < 0) {
            int c1 = -1, c2 = -1;
            for (int t = 0; t < tau; ++t) {
              if (c1 < 0 && coloring.free_for_uav(m, t)) c1 = t;
              if (c2 < 0 && coloring.free_for_user(k, t)) c2 = t;
            }
            coloring.kempe_swap(k, c1, c2);
            slot = c1;
          }
          coloring.place(k, m, slot);
          cursor = (slot + 1) % tau;
        }
      }
    }

    for (int m = 0; m < num_m; ++m) {
      for (int t = 0; t < tau; ++t) {
        const int k = coloring.user_at[m][t];
        if (k >= 0) binary.weights[n * tau + t](k, m) = Scalar(1);
      }
    }
  }
  return binary;
}

// Resample the closed waypoint polyline at N' = tau*N points. Hops shrink by
// (N-1)/(N'-1) <= N/N', so the result satisfies the N'-slot speed cap, and
// endpoint periodicity is exact.
template <typename Scalar>
Trajectory<Scalar> expand_trajectory(const Trajectory<Scalar>& traj, int tau) {
  const int num_n = traj.num_slots();
  const int num_out = num_n * tau;
  Trajectory<Scalar> out(traj.num_uavs(), num_out);
  for (int l = 0; l < num_out; ++l) {
    const Scalar lambda =
        Scalar(l) * Scalar(num_n - 1) / Scalar(num_out - 1);
    int seg = std::min(static_cast<int>(lambda), num_n - 2);
    const Scalar f = lambda - Scalar(seg);
    for (int m = 0; m < traj.num_uavs(); ++m) {
      out.x(m, l) = (Scalar(1) - f) * traj.x(m, seg) + f * traj.x(m, seg + 1);
      out.y(m, l) = (Scalar(1) - f) * traj.y(m, seg) + f * traj.y(m, seg + 1);
    }
  }
  return out;
}

// Repeat each slot's power over its tau sub-slots.
template <typename Scalar>
PowerProfile<Scalar> expand_power(const PowerProfile<Scalar>& power, int tau) {
  PowerProfile<Scalar> out(Matrix<Scalar>(power.num_uavs(), power.num_slots() * tau));
  for (int n = 0; n < power.num_slots(); ++n) {
    for (int t = 0; t < tau; ++t) out.levels.col(n * tau + t) = power.levels.col(n);
  }
  return out;
}

// The same scenario viewed at sub-slot resolution.
template <typename Scalar>
Scenario<Scalar> subslot_scenario(const Scenario<Scalar>& scn, int tau) {
  Scenario<Scalar> out = scn;
  out.num_slots = scn.num_slots * tau;
  out.subslot_factor = 1;
  return out;
}

}  // namespace uavnet::planner
