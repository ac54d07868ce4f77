// SPDX-License-Identifier: Apache-2.0
//
// Channel, SINR and rate arithmetic plus feasibility validation for the
// original (unrelaxed) problem constraints.

#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "uavnet/types.hpp"

namespace uavnet {

namespace detail {

template <typename Scalar>
void require_shapes(const Scenario<Scalar>& scn, const Schedule<Scalar>& schedule,
                    const Trajectory<Scalar>& traj, const PowerProfile<Scalar>& power) {
  const int k = scn.num_users();
  const int m = scn.num_uavs;
  const int n = scn.num_slots;
  if (schedule.num_users() != k || schedule.num_uavs() != m || schedule.num_slots() != n ||
      traj.num_uavs() != m || traj.num_slots() != n || power.num_uavs() != m ||
      power.num_slots() != n) {
    throw std::invalid_argument("model: schedule/trajectory/power shapes do not match scenario");
  }
}

}  // namespace detail

// Free-space path loss gain from a UAV at horizontal position q to user k.
template <typename Scalar>
Scalar channel_gain(const Scenario<Scalar>& scn, const Vector2<Scalar>& uav_pos, int user_index) {
  if (user_index < 0 || user_index >= scn.num_users()) {
    throw std::domain_error("channel_gain: invalid user index");
  }
  const Scalar d2 = (uav_pos - scn.user(user_index)).squaredNorm();
  return scn.ref_channel_gain / (scn.altitude * scn.altitude + d2);
}

// K x M gain matrix h_{k,m}[n] for one slot.
template <typename Scalar>
Matrix<Scalar> gain_matrix(const Scenario<Scalar>& scn, const Trajectory<Scalar>& traj, int n) {
  const int num_k = scn.num_users();
  const int num_m = traj.num_uavs();
  Matrix<Scalar> h(num_k, num_m);
  const Scalar h2 = scn.altitude * scn.altitude;
  for (int m = 0; m < num_m; ++m) {
    const auto dx = scn.user_positions.row(0).array() - traj.x(m, n);
    const auto dy = scn.user_positions.row(1).array() - traj.y(m, n);
    h.col(m) = (scn.ref_channel_gain / (h2 + dx.square() + dy.square())).transpose();
  }
  return h;
}

// Full per-slot gain table.
template <typename Scalar>
SlotStack<Scalar> gain_table(const Scenario<Scalar>& scn, const Trajectory<Scalar>& traj) {
  SlotStack<Scalar> table(scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) table[n] = gain_matrix(scn, traj, n);
  return table;
}

// SINR of user k when served by UAV m in slot n; all other UAVs interfere.
template <typename Scalar>
Scalar sinr(const Scenario<Scalar>& scn, const Trajectory<Scalar>& traj,
            const PowerProfile<Scalar>& power, int user_index, int uav_index, int slot) {
  const int num_m = scn.num_uavs;
  if (user_index < 0 || user_index >= scn.num_users() || uav_index < 0 || uav_index >= num_m ||
      slot < 0 || slot >= scn.num_slots) {
    throw std::domain_error("sinr: index out of range");
  }
  Scalar interference = Scalar(0);
  for (int j = 0; j < num_m; ++j) {
    if (j == uav_index) continue;
    interference +=
        power.levels(j, slot) * channel_gain(scn, traj.waypoint(j, slot), user_index);
  }
  const Scalar signal = power.levels(uav_index, slot) *
                        channel_gain(scn, traj.waypoint(uav_index, slot), user_index);
  return signal / (interference + scn.noise_power);
}

// Per-slot SINR matrix gamma_{k,m}[n] given a precomputed gain matrix.
template <typename Scalar>
Matrix<Scalar> sinr_matrix(const Scenario<Scalar>& scn, const Matrix<Scalar>& gains,
                           const PowerProfile<Scalar>& power, int n) {
  const int num_k = static_cast<int>(gains.rows());
  const int num_m = static_cast<int>(gains.cols());
  // received(k,j) = p_j h_{k,j}; total(k) = sum_j received(k,j)
  Matrix<Scalar> received = gains.array().rowwise() * power.levels.col(n).transpose().array();
  Vector<Scalar> total = received.rowwise().sum();
  Matrix<Scalar> out(num_k, num_m);
  for (int m = 0; m < num_m; ++m) {
    out.col(m) = received.col(m).array() /
                 (total.array() - received.col(m).array() + scn.noise_power);
  }
  return out;
}

// R_k[n] = sum_m alpha_{k,m}[n] log2(1 + gamma_{k,m}[n]), averages and min.
template <typename Scalar>
RateReport<Scalar> evaluate_rates(const Scenario<Scalar>& scn, const Schedule<Scalar>& schedule,
                                  const Trajectory<Scalar>& traj,
                                  const PowerProfile<Scalar>& power) {
  detail::require_shapes(scn, schedule, traj, power);
  const int num_k = scn.num_users();
  const int num_n = scn.num_slots;
  RateReport<Scalar> report;
  report.per_slot_rates = Matrix<Scalar>::Zero(num_k, num_n);
  for (int n = 0; n < num_n; ++n) {
    const Matrix<Scalar> gains = gain_matrix(scn, traj, n);
    const Matrix<Scalar> gamma = sinr_matrix(scn, gains, power, n);
    const Matrix<Scalar> log_rates =
        gamma.unaryExpr([](Scalar g) { return log2_1p(g); });
    report.per_slot_rates.col(n) = (schedule.weights[n].array() * log_rates.array())
                                       .rowwise()
                                       .sum();
  }
  report.average_rates = report.per_slot_rates.rowwise().mean();
  report.min_rate = report.average_rates.minCoeff();
  return report;
}

namespace detail {

// Relative slack accepted on the squared-separation constraint; the SCA step
// satisfies it only up to solver tolerance.
constexpr double kSeparationRelTol = 1e-6;
constexpr double kSumTol = 1e-9;
constexpr double kBoundsTol = 1e-12;

}  // namespace detail

// Returns one record per breached constraint; empty means feasible.
template <typename Scalar>
std::vector<Violation> validate_feasibility(const Scenario<Scalar>& scn,
                                            const Schedule<Scalar>& schedule,
                                            const Trajectory<Scalar>& traj,
                                            const PowerProfile<Scalar>& power) {
  detail::require_shapes(scn, schedule, traj, power);
  std::vector<Violation> out;
  const int num_k = scn.num_users();
  const int num_m = scn.num_uavs;
  const int num_n = scn.num_slots;

  for (int n = 0; n < num_n; ++n) {
    const auto& w = schedule.weights[n];
    for (int k = 0; k < num_k; ++k) {
      for (int m = 0; m < num_m; ++m) {
        const double a = static_cast<double>(w(k, m));
        if (a < -detail::kBoundsTol || a > 1.0 + detail::kBoundsTol) {
          out.push_back({ConstraintKind::schedule_bounds, k, m, -1, n,
                         a < 0 ? -a : a - 1.0});
        } else if (schedule.mode == ScheduleMode::binary &&
                   std::min(std::abs(a), std::abs(a - 1.0)) > detail::kBoundsTol) {
          out.push_back({ConstraintKind::schedule_binary, k, m, -1, n,
                         std::min(std::abs(a), std::abs(a - 1.0))});
        }
      }
    }
    for (int m = 0; m < num_m; ++m) {
      const double s = static_cast<double>(w.col(m).sum());
      if (s > 1.0 + detail::kSumTol) {
        out.push_back({ConstraintKind::schedule_uav_sum, -1, m, -1, n, s - 1.0});
      }
    }
    for (int k = 0; k < num_k; ++k) {
      const double s = static_cast<double>(w.row(k).sum());
      if (s > 1.0 + detail::kSumTol) {
        out.push_back({ConstraintKind::schedule_user_sum, k, -1, -1, n, s - 1.0});
      }
    }
  }

  const double step_cap = static_cast<double>(scn.max_step());
  for (int m = 0; m < num_m; ++m) {
    const double wrap = static_cast<double>(
        (traj.waypoint(m, 0) - traj.waypoint(m, num_n - 1)).norm());
    if (wrap > detail::kSumTol * std::max(1.0, step_cap)) {
      out.push_back({ConstraintKind::trajectory_periodicity, -1, m, -1, num_n - 1, wrap});
    }
    for (int n = 0; n + 1 < num_n; ++n) {
      const double hop =
          static_cast<double>((traj.waypoint(m, n + 1) - traj.waypoint(m, n)).norm());
      if (hop > step_cap * (1.0 + detail::kSumTol)) {
        out.push_back({ConstraintKind::trajectory_speed, -1, m, -1, n, hop - step_cap});
      }
    }
  }

  const double d2_min = static_cast<double>(scn.min_separation * scn.min_separation) *
                        (1.0 - detail::kSeparationRelTol);
  for (int n = 0; n < num_n; ++n) {
    for (int m = 0; m < num_m; ++m) {
      for (int j = m + 1; j < num_m; ++j) {
        const double d2 = static_cast<double>(
            (traj.waypoint(m, n) - traj.waypoint(j, n)).squaredNorm());
        if (d2 < d2_min) {
          out.push_back({ConstraintKind::trajectory_separation, -1, m, j, n,
                         static_cast<double>(scn.min_separation) - std::sqrt(d2)});
        }
      }
    }
  }

  const double p_max = static_cast<double>(scn.max_power);
  for (int m = 0; m < num_m; ++m) {
    for (int n = 0; n < num_n; ++n) {
      const double p = static_cast<double>(power.levels(m, n));
      if (p < -detail::kBoundsTol * p_max || p > p_max * (1.0 + detail::kBoundsTol)) {
        out.push_back({ConstraintKind::power_box, -1, m, -1, n,
                       p < 0 ? -p : p - p_max});
      }
    }
  }
  return out;
}

}  // namespace uavnet
