// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "uavnet/model.hpp"

using namespace uavnet;
using oracles::desk_scenario;
using oracles::user_points;

namespace {

Scenario<double> one_user_scenario() {
  auto scn = desk_scenario(user_points({{0.0, 0.0}}), 1, 100.0, 4);
  return scn;
}

}  // namespace

TEST_CASE("channel gain matches direct substitution") {
  auto scn = one_user_scenario();
  // UAV directly above the user: rho0 / H^2
  CHECK(channel_gain(scn, Vector2<double>(0, 0), 0) == doctest::Approx(1e-10).epsilon(1e-12));
  // 100 m horizontal offset doubles the squared distance, halving the gain.
  CHECK(channel_gain(scn, Vector2<double>(100, 0), 0) ==
        doctest::Approx(5e-11).epsilon(1e-12));
}

TEST_CASE("channel gain equals an independent formula evaluation") {
  auto scn = desk_scenario(user_points({{-419, 400}, {600, 1130}}), 1, 100.0, 4);
  auto gen = oracles::rng(11);
  for (int i = 0; i < 200; ++i) {
    Vector2<double> q(oracles::uniform(gen, -1500, 1500), oracles::uniform(gen, -1500, 1500));
    const int k = i % 2;
    const double expected =
        oracles::gain_formula(scn.ref_channel_gain, scn.altitude, q, scn.user(k));
    CHECK(channel_gain(scn, q, k) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("channel gain decreases strictly with horizontal distance") {
  auto scn = one_user_scenario();
  auto gen = oracles::rng(7);
  for (int i = 0; i < 100; ++i) {
    const double r1 = oracles::uniform(gen, 0.0, 2000.0);
    const double r2 = r1 + oracles::uniform(gen, 1.0, 500.0);
    const double angle = oracles::uniform(gen, 0.0, 6.28);
    Vector2<double> q1(r1 * std::cos(angle), r1 * std::sin(angle));
    Vector2<double> q2(r2 * std::cos(angle), r2 * std::sin(angle));
    CHECK(channel_gain(scn, q1, 0) > channel_gain(scn, q2, 0));
  }
}

TEST_CASE("channel gain rejects invalid user index") {
  auto scn = one_user_scenario();
  CHECK_THROWS_AS(channel_gain(scn, Vector2<double>(0, 0), 1), std::domain_error);
  CHECK_THROWS_AS(channel_gain(scn, Vector2<double>(0, 0), -1), std::domain_error);
}

TEST_CASE("sinr with one UAV is pure SNR") {
  auto scn = one_user_scenario();
  auto traj = Trajectory<double>::constant(user_points({{0.0, 0.0}}), scn.num_slots);
  auto power = PowerProfile<double>::full(scn);
  // p=0.1, h=1e-10, sigma^2=1e-14 -> 1000
  CHECK(sinr(scn, traj, power, 0, 0, 0) == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("sinr with silent interferers equals the single-UAV value") {
  auto scn = desk_scenario(user_points({{0.0, 0.0}}), 2, 100.0, 4);
  scn.min_separation = 100.0;
  Trajectory<double> traj(2, scn.num_slots);
  traj.x.row(0).setConstant(0.0);
  traj.x.row(1).setConstant(300.0);
  auto power = PowerProfile<double>::full(scn);
  power.levels.row(1).setZero();

  auto scn1 = scn;
  scn1.num_uavs = 1;
  Trajectory<double> traj1(1, scn.num_slots);
  traj1.x = traj.x.row(0);
  traj1.y = traj.y.row(0);
  PowerProfile<double> power1(Matrix<double>::Constant(1, scn.num_slots, scn.max_power));

  CHECK(sinr(scn, traj, power, 0, 0, 0) ==
        doctest::Approx(sinr(scn1, traj1, power1, 0, 0, 0)).epsilon(1e-15));
}

TEST_CASE("sinr matches brute-force interference summation") {
  auto scn = desk_scenario(user_points({{-200, 50}, {350, -80}}), 2, 100.0, 4);
  auto gen = oracles::rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory<double> traj(2, scn.num_slots);
    for (int m = 0; m < 2; ++m) {
      for (int n = 0; n < scn.num_slots; ++n) {
        traj.x(m, n) = oracles::uniform(gen, -500, 500);
        traj.y(m, n) = oracles::uniform(gen, -500, 500);
      }
    }
    PowerProfile<double> power(Matrix<double>::Zero(2, scn.num_slots));
    for (int m = 0; m < 2; ++m) {
      for (int n = 0; n < scn.num_slots; ++n) {
        power.levels(m, n) = oracles::uniform(gen, 0, scn.max_power);
      }
    }
    const int k = trial % 2;
    const int m = (trial / 2) % 2;
    const int n = trial % scn.num_slots;
    std::vector<double> gains, powers;
    for (int j = 0; j < 2; ++j) {
      gains.push_back(
          oracles::gain_formula(scn.ref_channel_gain, scn.altitude, traj.waypoint(j, n), scn.user(k)));
      powers.push_back(power.levels(j, n));
    }
    const double expected = oracles::sinr_formula(powers, gains, m, scn.noise_power);
    CHECK(sinr(scn, traj, power, k, m, n) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("sinr is monotone in own and interferer power") {
  auto scn = desk_scenario(user_points({{0, 0}}), 2, 100.0, 4);
  Trajectory<double> traj(2, scn.num_slots);
  traj.x.row(1).setConstant(250.0);
  auto gen = oracles::rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    PowerProfile<double> power(Matrix<double>::Zero(2, scn.num_slots));
    power.levels(0, 0) = oracles::uniform(gen, 1e-4, scn.max_power);
    power.levels(1, 0) = oracles::uniform(gen, 1e-4, scn.max_power);
    const double base = sinr(scn, traj, power, 0, 0, 0);

    auto more_own = power;
    more_own.levels(0, 0) *= 1.1;
    CHECK(sinr(scn, traj, more_own, 0, 0, 0) >= base);

    auto more_interf = power;
    more_interf.levels(1, 0) *= 1.1;
    CHECK(sinr(scn, traj, more_interf, 0, 0, 0) <= base);
  }
}

TEST_CASE("evaluate_rates: empty schedule gives zero rates") {
  auto scn = one_user_scenario();
  auto traj = Trajectory<double>::constant(user_points({{0.0, 0.0}}), scn.num_slots);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(1, 1, scn.num_slots);
  auto report = evaluate_rates(scn, schedule, traj, power);
  CHECK(report.min_rate == 0.0);
  CHECK(report.per_slot_rates.maxCoeff() == 0.0);
}

TEST_CASE("evaluate_rates: hovering single UAV achieves log2(1001) every slot") {
  auto scn = one_user_scenario();
  auto traj = Trajectory<double>::constant(user_points({{0.0, 0.0}}), scn.num_slots);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(1, 1, scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) schedule.weights[n](0, 0) = 1.0;
  auto report = evaluate_rates(scn, schedule, traj, power);
  const double expected = std::log2(1001.0);  // ~9.9672 bps/Hz
  for (int n = 0; n < scn.num_slots; ++n) {
    CHECK(report.per_slot_rates(0, n) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(report.min_rate == doctest::Approx(9.9672).epsilon(1e-4));
}

TEST_CASE("evaluate_rates: symmetric users with 50/50 time share get equal rates") {
  auto scn = desk_scenario(user_points({{-200, 0}, {200, 0}}), 1, 100.0, 4);
  auto traj = Trajectory<double>::constant(user_points({{0.0, 0.0}}), scn.num_slots);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(2, 1, scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    schedule.weights[n](0, 0) = 0.5;
    schedule.weights[n](1, 0) = 0.5;
  }
  auto report = evaluate_rates(scn, schedule, traj, power);
  CHECK(report.average_rates(0) == doctest::Approx(report.average_rates(1)).epsilon(1e-14));
}

TEST_CASE("evaluate_rates: binary and relaxed schedules with identical weights agree exactly") {
  auto scn = desk_scenario(user_points({{-100, 0}, {150, 40}}), 2, 100.0, 4);
  Trajectory<double> traj(2, scn.num_slots);
  traj.x.row(0).setConstant(-100);
  traj.x.row(1).setConstant(150);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> relaxed(2, 2, scn.num_slots, ScheduleMode::relaxed);
  Schedule<double> binary(2, 2, scn.num_slots, ScheduleMode::binary);
  for (int n = 0; n < scn.num_slots; ++n) {
    relaxed.weights[n](0, 0) = 1.0;
    relaxed.weights[n](1, 1) = 1.0;
    binary.weights[n] = relaxed.weights[n];
  }
  auto a = evaluate_rates(scn, relaxed, traj, power);
  auto b = evaluate_rates(scn, binary, traj, power);
  CHECK(a.min_rate == b.min_rate);
  CHECK((a.per_slot_rates - b.per_slot_rates).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evaluate_rates: min_rate bounds every average rate") {
  auto scn = desk_scenario(user_points({{-300, 10}, {200, -90}, {40, 260}}), 2, 100.0, 4);
  auto gen = oracles::rng(3);
  Trajectory<double> traj(2, scn.num_slots);
  traj.x.row(1).setConstant(400);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(3, 2, scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    for (int k = 0; k < 3; ++k) {
      const int m = k % 2;
      schedule.weights[n](k, m) = oracles::uniform(gen, 0.0, 0.45);
    }
  }
  auto report = evaluate_rates(scn, schedule, traj, power);
  for (int k = 0; k < 3; ++k) CHECK(report.min_rate <= report.average_rates(k) + 1e-15);
}

TEST_CASE("evaluate_rates rejects shape mismatch") {
  auto scn = one_user_scenario();
  auto traj = Trajectory<double>::constant(user_points({{0.0, 0.0}}), scn.num_slots);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> wrong(2, 1, scn.num_slots);
  CHECK_THROWS_AS(evaluate_rates(scn, wrong, traj, power), std::invalid_argument);
}

TEST_CASE("validate_feasibility: clean instance has no violations") {
  auto scn = desk_scenario(user_points({{-100, 0}, {150, 40}}), 2, 100.0, 4);
  Trajectory<double> traj(2, scn.num_slots);
  traj.x.row(0).setConstant(-100);
  traj.x.row(1).setConstant(150);
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(2, 2, scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    schedule.weights[n](0, 0) = 1.0;
    schedule.weights[n](1, 1) = 1.0;
  }
  CHECK(validate_feasibility(scn, schedule, traj, power).empty());
}

TEST_CASE("validate_feasibility: a 1.5x overspeed hop is reported once") {
  auto scn = desk_scenario(user_points({{0, 0}}), 1, 100.0, 4);
  auto traj = Trajectory<double>::constant(user_points({{0.0, 0.0}}), scn.num_slots);
  const double step = scn.max_step();
  // One overspeed hop out, then a legal two-hop return to keep periodicity.
  traj.x(0, 1) = 1.5 * step;
  traj.x(0, 2) = 0.75 * step;
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(1, 1, scn.num_slots);
  auto violations = validate_feasibility(scn, schedule, traj, power);
  int speed_count = 0;
  for (const auto& v : violations) {
    if (v.kind == ConstraintKind::trajectory_speed) {
      ++speed_count;
      CHECK(v.uav == 0);
      CHECK(v.magnitude == doctest::Approx(0.5 * step).epsilon(1e-9));
      CHECK(v.slot == 0);
    }
  }
  CHECK(speed_count == 1);
}

TEST_CASE("validate_feasibility: coincident UAVs report the separation deficit") {
  auto scn = desk_scenario(user_points({{0, 0}}), 2, 100.0, 4);
  Trajectory<double> traj(2, scn.num_slots);  // both at the origin everywhere
  traj.x.row(1).setConstant(0.0);
  // Separate them in all slots except slot 1.
  traj.x(1, 0) = 200;
  traj.x(1, 2) = 200;
  traj.x(1, 3) = 200;
  traj.x(0, 0) = 0;
  // slot 1: coincident
  auto power = PowerProfile<double>::full(scn);
  Schedule<double> schedule(1, 2, scn.num_slots);
  auto violations = validate_feasibility(scn, schedule, traj, power);
  int sep_count = 0;
  for (const auto& v : violations) {
    if (v.kind == ConstraintKind::trajectory_separation) {
      ++sep_count;
      CHECK(v.slot == 1);
      CHECK(v.magnitude == doctest::Approx(100.0).epsilon(1e-12));
    }
  }
  CHECK(sep_count == 1);
}

TEST_CASE("min_slots_for_accuracy") {
  CHECK(min_slots_for_accuracy(50.0, 210.0, 100.0, 0.5) == 210);
  CHECK(min_slots_for_accuracy(50.0, 100.0, 100.0, 1.0) == 50);
  // Halving the threshold doubles the requirement (up to ceiling).
  CHECK(min_slots_for_accuracy(50.0, 100.0, 100.0, 0.5) == 100);
  CHECK_THROWS_AS(min_slots_for_accuracy(-1.0, 100.0, 100.0, 0.5), std::domain_error);
}

TEST_CASE("scenario validation rejects bad fields") {
  auto scn = one_user_scenario();
  CHECK_NOTHROW(scn.validate());

  auto bad = scn;
  bad.altitude = -5.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("altitude"), std::invalid_argument);

  bad = scn;
  bad.num_slots = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = scn;
  bad.num_slots = 3;
  bad.period = 1000.0;  // N below the accuracy bound
  bad.discretization_threshold = 0.5;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("num_slots"), std::invalid_argument);

  bad = scn;
  bad.subslot_factor = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
