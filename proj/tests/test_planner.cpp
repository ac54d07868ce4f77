// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "uavnet/planner.hpp"

using namespace uavnet;
using oracles::desk_scenario;
using oracles::user_points;
namespace pl = uavnet::planner;

namespace {

Schedule<double> empty_schedule(const Scenario<double>& scn) {
  return Schedule<double>(scn.num_users(), scn.num_uavs, scn.num_slots);
}

}  // namespace

TEST_CASE("init: single UAV circles the user centroid") {
  auto scn = desk_scenario(user_points({{-200, 0}, {200, 0}, {0, 200}, {0, -200}}), 1, 60.0, 8);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  CHECK(spec.center.x() == doctest::Approx(0.0));
  CHECK(spec.center.y() == doctest::Approx(0.0));
  CHECK(spec.cover_radius == doctest::Approx(200.0));
  CHECK(spec.packing_radius == doctest::Approx(200.0));  // ratio 1 for M=1
  CHECK(spec.radius <= spec.packing_radius / 2 + 1e-12);
  CHECK(validate_feasibility(scn, empty_schedule(scn), traj, PowerProfile<double>::full(scn))
            .empty());
}

TEST_CASE("init: two UAVs use the half-radius packing") {
  auto scn = desk_scenario(user_points({{-800, 0}, {800, 0}, {0, 800}, {0, -800}}), 2, 120.0, 8);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  CHECK(spec.packing_radius == doctest::Approx(spec.cover_radius / 2));
  // Centers at +/- r_u/2 along the axes from the centroid.
  CHECK(spec.circle_centers.col(0).norm() == doctest::Approx(spec.cover_radius / 2));
  CHECK(spec.circle_centers.col(1).norm() == doctest::Approx(spec.cover_radius / 2));
  CHECK((spec.circle_centers.col(0) + spec.circle_centers.col(1)).norm() ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(validate_feasibility(scn, empty_schedule(scn), traj, PowerProfile<double>::full(scn))
            .empty());
}

TEST_CASE("init: speed-limit radius matches V T / (2 pi)") {
  auto scn = desk_scenario(user_points({{-2000, 0}, {2000, 0}}), 1, 210.0, 210);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  CHECK(spec.speed_limit_radius == doctest::Approx(50.0 * 210.0 / (2 * M_PI)).epsilon(1e-9));
  CHECK(spec.speed_limit_radius == doctest::Approx(1671.1).epsilon(1e-4));
  // The discrete chord cap binds slightly below the continuous-time cap.
  CHECK(spec.discrete_limit_radius < spec.speed_limit_radius);
  CHECK(spec.discrete_limit_radius > 0.99 * spec.speed_limit_radius);
  CHECK(validate_feasibility(scn, empty_schedule(scn), traj, PowerProfile<double>::full(scn))
            .empty());
}

TEST_CASE("init: packing ratios for three to five UAVs") {
  CHECK(pl::detail::packing_ratio<double>(3) == doctest::Approx(0.46410161).epsilon(1e-7));
  CHECK(pl::detail::packing_ratio<double>(4) == doctest::Approx(0.41421356).epsilon(1e-7));
  CHECK(pl::detail::packing_ratio<double>(5) == doctest::Approx(0.37019).epsilon(1e-4));
  CHECK_THROWS_AS(pl::detail::packing_ratio<double>(6), std::invalid_argument);
}

TEST_CASE("init: clustered users trigger the separation repair") {
  // All users within 50 m; two UAVs with d_min=100 would collide without
  // rescaling the cover disk.
  auto scn = desk_scenario(user_points({{0, 0}, {40, 10}, {-20, 30}}), 2, 120.0, 8);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  CHECK(spec.packing_radius >= scn.min_separation - 1e-9);
  CHECK(validate_feasibility(scn, empty_schedule(scn), traj, PowerProfile<double>::full(scn))
            .empty());
}

TEST_CASE("init: periodicity is exact") {
  auto scn = desk_scenario(user_points({{-500, 0}, {500, 0}}), 1, 80.0, 10);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  CHECK(traj.x(0, 0) == traj.x(0, scn.num_slots - 1));
  CHECK(traj.y(0, 0) == traj.y(0, scn.num_slots - 1));
}

TEST_CASE("run_bcd: single user converges to the hover rate") {
  auto scn = desk_scenario(user_points({{100, -50}}), 1, 60.0, 6);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  pl::BcdConfig<double> config;
  config.max_iterations = 30;
  auto report = pl::run_bcd(scn, config, traj, PowerProfile<double>::full(scn));
  CHECK_FALSE(report.aborted);
  CHECK(report.converged);
  CHECK(report.final_objective == doctest::Approx(std::log2(1001.0)).epsilon(1e-4));
}

TEST_CASE("run_bcd: objective trace is non-decreasing and outputs validate") {
  auto scn = desk_scenario(user_points({{-300, 0}, {350, 100}}), 1, 60.0, 8);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  pl::BcdConfig<double> config;
  config.max_iterations = 25;
  auto report = pl::run_bcd(scn, config, traj, PowerProfile<double>::full(scn));
  CHECK_FALSE(report.aborted);
  for (size_t i = 1; i < report.objective_trace.size(); ++i) {
    CHECK(report.objective_trace[i] >= report.objective_trace[i - 1] - 1e-9);
  }
  CHECK(validate_feasibility(scn, report.schedule, report.trajectory, report.power).empty());
  // The reported triple realizes the final objective.
  const auto rates = evaluate_rates(scn, report.schedule, report.trajectory, report.power);
  CHECK(rates.min_rate == doctest::Approx(report.final_objective).epsilon(1e-8));
}

TEST_CASE("run_bcd: per-block objectives never decrease within an iteration") {
  auto scn = desk_scenario(user_points({{-250, 0}, {250, 0}}), 2, 80.0, 6);
  scn.min_separation = 100.0;
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  pl::BcdConfig<double> config;
  config.max_iterations = 10;
  auto report = pl::run_bcd(scn, config, traj, PowerProfile<double>::full(scn));
  CHECK_FALSE(report.aborted);
  for (const auto& b : report.block_objectives) {
    CHECK(b.after_trajectory >= b.after_scheduling - 1e-9);
    CHECK(b.after_power >= b.after_trajectory - 1e-9);
  }
}

TEST_CASE("run_bcd: disabling all blocks reproduces the frozen-input schedule value") {
  auto scn = desk_scenario(user_points({{-300, 0}, {350, 100}}), 1, 60.0, 8);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  auto power = PowerProfile<double>::full(scn);
  pl::BcdConfig<double> config;
  config.optimize_trajectory = false;
  config.optimize_power = false;
  auto report = pl::run_bcd(scn, config, traj, power);
  CHECK(report.converged);
  CHECK(report.iterations == 2);  // identical LP twice, then stop

  const auto direct = scheduling::solve(scheduling::build_problem(scn, traj, power));
  CHECK(report.final_objective == doctest::Approx(direct.eta).epsilon(1e-12));
  // Trajectory and power pass through untouched.
  CHECK((report.trajectory.x - traj.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((report.power.levels - power.levels).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reconstruct: paper rounding example (0.69, 0.31)") {
  Schedule<double> relaxed(2, 1, 1);
  relaxed.weights[0](0, 0) = 0.69;
  relaxed.weights[0](1, 0) = 0.31;

  auto b10 = pl::reconstruct_binary_schedule(relaxed, 10);
  int u0 = 0, u1 = 0;
  for (int t = 0; t < 10; ++t) {
    u0 += static_cast<int>(b10.weights[t](0, 0));
    u1 += static_cast<int>(b10.weights[t](1, 0));
  }
  CHECK(u0 == 7);
  CHECK(u1 == 3);

  auto b100 = pl::reconstruct_binary_schedule(relaxed, 100);
  u0 = u1 = 0;
  for (int t = 0; t < 100; ++t) {
    u0 += static_cast<int>(b100.weights[t](0, 0));
    u1 += static_cast<int>(b100.weights[t](1, 0));
  }
  CHECK(u0 == 69);
  CHECK(u1 == 31);
}

TEST_CASE("reconstruct: already-binary schedules replicate unchanged") {
  Schedule<double> relaxed(2, 2, 2);
  relaxed.weights[0](0, 0) = 1.0;
  relaxed.weights[0](1, 1) = 1.0;
  relaxed.weights[1](1, 0) = 1.0;
  for (int tau : {1, 7}) {
    auto binary = pl::reconstruct_binary_schedule(relaxed, tau);
    REQUIRE(binary.num_slots() == 2 * tau);
    for (int n = 0; n < 2; ++n) {
      for (int t = 0; t < tau; ++t) {
        CHECK((binary.weights[n * tau + t] - relaxed.weights[n]).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("reconstruct: rounding overflow is corrected per UAV and per user") {
  // UAV overflow: three users at 0.35 round to 4+4+4 = 12 > 10.
  Schedule<double> uav_case(3, 1, 1);
  uav_case.weights[0].col(0) << 0.35, 0.35, 0.35;
  auto fixed = pl::reconstruct_binary_schedule(uav_case, 10);
  int total = 0;
  for (int t = 0; t < 10; ++t) total += static_cast<int>(fixed.weights[t].col(0).sum());
  CHECK(total == 10);

  // User overflow: 0.495 + 0.505 on two UAVs rounds to 50 + 51 = 101 > 100.
  Schedule<double> user_case(1, 2, 1);
  user_case.weights[0](0, 0) = 0.495;
  user_case.weights[0](0, 1) = 0.505;
  auto fixed2 = pl::reconstruct_binary_schedule(user_case, 100);
  int served = 0;
  for (int t = 0; t < 100; ++t) served += static_cast<int>(fixed2.weights[t].row(0).sum());
  CHECK(served == 100);
  // No sub-slot may schedule the user on both UAVs.
  for (int t = 0; t < 100; ++t) CHECK(fixed2.weights[t].row(0).sum() <= 1.0);
}

TEST_CASE("reconstruct: conflicting contiguous layouts are repaired into matchings") {
  // Descending-count contiguous placement would collide on user 2 for both
  // UAVs; the chain swaps must restore per-sub-slot feasibility.
  Schedule<double> relaxed(3, 2, 1);
  relaxed.weights[0] << 0.5, 0.3,
                        0.3, 0.5,
                        0.2, 0.2;
  auto binary = pl::reconstruct_binary_schedule(relaxed, 10);
  std::vector<int> per_pair(6, 0);
  for (int t = 0; t < 10; ++t) {
    const auto& w = binary.weights[t];
    for (int k = 0; k < 3; ++k) CHECK(w.row(k).sum() <= 1.0);
    for (int m = 0; m < 2; ++m) CHECK(w.col(m).sum() <= 1.0);
    for (int k = 0; k < 3; ++k) {
      for (int m = 0; m < 2; ++m) per_pair[k * 2 + m] += static_cast<int>(w(k, m));
    }
  }
  CHECK(per_pair[0 * 2 + 0] == 5);
  CHECK(per_pair[1 * 2 + 1] == 5);
  CHECK(per_pair[2 * 2 + 0] == 2);
  CHECK(per_pair[2 * 2 + 1] == 2);
}

TEST_CASE("reconstruct: random relaxed schedules stay feasible at sub-slots") {
  auto gen = oracles::rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const int num_k = 2 + trial % 3;
    const int num_m = 1 + trial % 2;
    const int num_n = 1 + trial % 3;
    Schedule<double> relaxed(num_k, num_m, num_n);
    for (int n = 0; n < num_n; ++n) {
      // Random weights then scale columns/rows into the capacity polytope.
      for (int k = 0; k < num_k; ++k) {
        for (int m = 0; m < num_m; ++m) {
          relaxed.weights[n](k, m) = oracles::uniform(gen, 0.0, 1.0);
        }
      }
      for (int m = 0; m < num_m; ++m) {
        const double s = relaxed.weights[n].col(m).sum();
        if (s > 1.0) relaxed.weights[n].col(m) /= s;
      }
      for (int k = 0; k < num_k; ++k) {
        const double s = relaxed.weights[n].row(k).sum();
        if (s > 1.0) relaxed.weights[n].row(k) /= s;
      }
    }
    const int tau = 10 + trial;
    auto binary = pl::reconstruct_binary_schedule(relaxed, tau);
    REQUIRE(binary.num_slots() == num_n * tau);
    for (int l = 0; l < binary.num_slots(); ++l) {
      const auto& w = binary.weights[l];
      for (int k = 0; k < num_k; ++k) {
        for (int m = 0; m < num_m; ++m) {
          CHECK((w(k, m) == 0.0 || w(k, m) == 1.0));
        }
      }
      for (int m = 0; m < num_m; ++m) CHECK(w.col(m).sum() <= 1.0 + 1e-12);
      for (int k = 0; k < num_k; ++k) CHECK(w.row(k).sum() <= 1.0 + 1e-12);
    }
    // Counts match the rounded weights up to the overflow correction.
    for (int n = 0; n < num_n; ++n) {
      for (int k = 0; k < num_k; ++k) {
        for (int m = 0; m < num_m; ++m) {
          int count = 0;
          for (int t = 0; t < tau; ++t) {
            count += static_cast<int>(binary.weights[n * tau + t](k, m));
          }
          CHECK(std::abs(count - tau * relaxed.weights[n](k, m)) <= 1.0 + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("reconstruct rejects tau = 0") {
  Schedule<double> relaxed(1, 1, 1);
  CHECK_THROWS_AS(pl::reconstruct_binary_schedule(relaxed, 0), std::domain_error);
}

TEST_CASE("expanded solutions stay feasible at sub-slot resolution") {
  auto scn = desk_scenario(user_points({{-300, 0}, {350, 100}}), 2, 80.0, 6);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  auto power = PowerProfile<double>::full(scn);

  const int tau = 8;
  auto scn_fine = pl::subslot_scenario(scn, tau);
  auto traj_fine = pl::expand_trajectory(traj, tau);
  auto power_fine = pl::expand_power(power, tau);

  Schedule<double> relaxed(scn.num_users(), scn.num_uavs, scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    relaxed.weights[n](0, 0) = 0.63;
    relaxed.weights[n](1, 0) = 0.37;
    relaxed.weights[n](1, 1) = 0.41;
  }
  auto binary = pl::reconstruct_binary_schedule(relaxed, tau);

  CHECK(validate_feasibility(scn_fine, binary, traj_fine, power_fine).empty());
  // Resampling keeps the endpoints periodic exactly.
  CHECK(traj_fine.x(0, 0) == traj_fine.x(0, traj_fine.num_slots() - 1));
}

TEST_CASE("binary min-rate approaches the relaxed min-rate as tau grows") {
  auto scn = desk_scenario(user_points({{-200, 0}, {260, 40}, {0, 300}}), 1, 60.0, 5);
  auto [traj, spec] = pl::init_circular_trajectories(scn);
  auto power = PowerProfile<double>::full(scn);
  auto sol = scheduling::solve(scheduling::build_problem(scn, traj, power));
  const double eta_relaxed = sol.eta;

  // Rates per sub-slot are frozen within each slot, so the only loss is the
  // rounding of the weights themselves.
  auto repeat_positions = [&](int tau) {
    Trajectory<double> t(scn.num_uavs, scn.num_slots * tau);
    for (int n = 0; n < scn.num_slots; ++n) {
      for (int s = 0; s < tau; ++s) {
        t.x.col(n * tau + s) = traj.x.col(n);
        t.y.col(n * tau + s) = traj.y.col(n);
      }
    }
    return t;
  };
  auto gap_at = [&](int tau) {
    auto binary = pl::reconstruct_binary_schedule(sol.schedule, tau);
    auto fine = evaluate_rates(pl::subslot_scenario(scn, tau), binary, repeat_positions(tau),
                               pl::expand_power(power, tau));
    return eta_relaxed - fine.min_rate;
  };
  CHECK(gap_at(100) <= 0.01 * eta_relaxed + 1e-12);
  CHECK(gap_at(10) >= -1e-9);
}
