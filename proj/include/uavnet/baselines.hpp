// SPDX-License-Identifier: Apache-2.0
//
// Reference schemes: the joint design, its ablations (no power control,
// fixed circular trajectory), a static deployment at the packed circle
// centers, and interference-free orthogonal transmission, plus the
// single-UAV analytic max-min ceiling and the access-delay metric.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/planner.hpp"

namespace uavnet::baselines {

enum class SchemeId {
  joint,                // Scheme I: scheduling + trajectory + power
  no_power_control,     // Scheme II: scheduling + trajectory, full power
  circular_full_power,  // Scheme III: scheduling only, circular trajectory
  static_uav,           // fixed at the packed centers
  orthogonal,           // round-robin slot masks, interference-free
};

inline const char* scheme_name(SchemeId id) {
  switch (id) {
    case SchemeId::joint: return "joint";
    case SchemeId::no_power_control: return "no_power_control";
    case SchemeId::circular_full_power: return "circular_full_power";
    case SchemeId::static_uav: return "static";
    case SchemeId::orthogonal: return "orthogonal";
  }
  return "unknown";
}

inline SchemeId parse_scheme(const std::string& name) {
  if (name == "joint") return SchemeId::joint;
  if (name == "no_power_control") return SchemeId::no_power_control;
  if (name == "circular_full_power" || name == "circular") return SchemeId::circular_full_power;
  if (name == "static" || name == "static_uav") return SchemeId::static_uav;
  if (name == "orthogonal") return SchemeId::orthogonal;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

inline std::vector<SchemeId> all_schemes() {
  return {SchemeId::joint, SchemeId::no_power_control, SchemeId::circular_full_power,
          SchemeId::static_uav, SchemeId::orthogonal};
}

// Round-robin transmission mask: UAV m is active exactly in slots n with
// n % M == m (0-based), which requires N divisible by M.
inline ActiveMask orthogonal_mask(int num_uavs, int num_slots) {
  if (num_slots % num_uavs != 0) {
    throw std::domain_error("orthogonal scheme requires num_slots divisible by num_uavs");
  }
  ActiveMask mask = ActiveMask::Constant(num_uavs, num_slots, false);
  for (int n = 0; n < num_slots; ++n) mask(n % num_uavs, n) = true;
  return mask;
}

template <typename Scalar>
struct SchemeSetup {
  Trajectory<Scalar> initial_trajectory;
  PowerProfile<Scalar> initial_power;
  planner::BcdConfig<Scalar> config;
  planner::InitTrajectorySpec<Scalar> init_spec;
};

// Static deployment: every UAV parked at its packed circle center (the user
// centroid when M = 1); scheduling and, for M >= 2, power remain optimized.
template <typename Scalar>
SchemeSetup<Scalar> static_uav_scheme(const Scenario<Scalar>& scn,
                                      const planner::BcdConfig<Scalar>& base = {}) {
  SchemeSetup<Scalar> setup;
  auto [traj, spec] = planner::init_circular_trajectories(scn);
  setup.init_spec = spec;
  setup.initial_trajectory = Trajectory<Scalar>::constant(spec.circle_centers, scn.num_slots);
  setup.initial_power = PowerProfile<Scalar>::full(scn);
  setup.config = base;
  setup.config.optimize_trajectory = false;
  setup.config.optimize_power = scn.num_uavs >= 2;
  return setup;
}

template <typename Scalar>
SchemeSetup<Scalar> orthogonal_scheme(const Scenario<Scalar>& scn,
                                      const planner::BcdConfig<Scalar>& base = {}) {
  SchemeSetup<Scalar> setup;
  auto [traj, spec] = planner::init_circular_trajectories(scn);
  setup.init_spec = spec;
  setup.initial_trajectory = traj;
  setup.config = base;
  setup.config.active_mask = orthogonal_mask(scn.num_uavs, scn.num_slots);
  setup.config.power_upper = Matrix<Scalar>::Zero(scn.num_uavs, scn.num_slots);
  setup.initial_power = PowerProfile<Scalar>(Matrix<Scalar>::Zero(scn.num_uavs, scn.num_slots));
  for (int m = 0; m < scn.num_uavs; ++m) {
    for (int n = 0; n < scn.num_slots; ++n) {
      if (setup.config.active_mask(m, n)) {
        setup.config.power_upper(m, n) = scn.max_power;
        setup.initial_power.levels(m, n) = scn.max_power;
      }
    }
  }
  return setup;
}

template <typename Scalar>
SchemeSetup<Scalar> make_scheme(const Scenario<Scalar>& scn, SchemeId id,
                                const planner::BcdConfig<Scalar>& base = {}) {
  switch (id) {
    case SchemeId::static_uav:
      return static_uav_scheme(scn, base);
    case SchemeId::orthogonal:
      return orthogonal_scheme(scn, base);
    default:
      break;
  }
  SchemeSetup<Scalar> setup;
  auto [traj, spec] = planner::init_circular_trajectories(scn);
  setup.init_spec = spec;
  setup.initial_trajectory = traj;
  setup.initial_power = PowerProfile<Scalar>::full(scn);
  setup.config = base;
  setup.config.optimize_trajectory = id != SchemeId::circular_full_power;
  setup.config.optimize_power = id == SchemeId::joint;
  return setup;
}

template <typename Scalar>
planner::SolveReport<Scalar> run_scheme(const Scenario<Scalar>& scn, SchemeId id,
                                        const planner::BcdConfig<Scalar>& base = {}) {
  const auto setup = make_scheme(scn, id, base);
  return planner::run_bcd(scn, setup.config, setup.initial_trajectory, setup.initial_power);
}

// Single-UAV ceiling: a UAV hovering over each user in turn with negligible
// travel time gives each of the K users log2(1 + P rho0/(H^2 sigma^2)) for a
// 1/K share of the period.
template <typename Scalar>
Scalar max_min_upper_bound(const Scenario<Scalar>& scn) {
  const Scalar snr =
      scn.max_power * scn.ref_channel_gain / (scn.altitude * scn.altitude * scn.noise_power);
  return log2_1p(snr) / Scalar(scn.num_users());
}

// Longest wait between consecutive service opportunities per user, over the
// cyclic period (seconds). Users never scheduled wait the whole period.
template <typename Scalar>
Vector<Scalar> access_delay(const Schedule<Scalar>& schedule, Scalar period) {
  if (schedule.mode != ScheduleMode::binary) {
    throw std::invalid_argument("access_delay expects a binary schedule");
  }
  const int num_sub = schedule.num_slots();
  const Scalar sub_len = period / Scalar(num_sub);
  Vector<Scalar> out(schedule.num_users());
  for (int k = 0; k < schedule.num_users(); ++k) {
    std::vector<int> served;
    for (int l = 0; l < num_sub; ++l) {
      if (schedule.weights[l].row(k).sum() > Scalar(0.5)) served.push_back(l);
    }
    if (served.empty()) {
      out(k) = period;
      continue;
    }
    int max_gap = num_sub - served.back() + served.front();  // wrap-around
    for (size_t i = 1; i < served.size(); ++i) {
      max_gap = std::max(max_gap, served[i] - served[i - 1]);
    }
    out(k) = Scalar(max_gap) * sub_len;
  }
  return out;
}

}  // namespace uavnet::baselines
