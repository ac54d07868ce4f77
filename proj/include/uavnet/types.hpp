// SPDX-License-Identifier: Apache-2.0
//
// Core domain types for the multi-UAV downlink planner: problem instances,
// trajectories, power profiles, schedules and rate reports. All quantities
// are stored in linear units (meters, seconds, watts, dimensionless gains);
// dB values exist only at the I/O boundary.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavnet {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
// Columns are 2D points (positions in meters).
template <typename Scalar>
using Points = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
// One K-by-M matrix per time slot.
template <typename Scalar>
using SlotStack = std::vector<Matrix<Scalar>>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

template <typename Scalar>
constexpr Scalar log2e() {
  return Scalar(1.4426950408889634073599246810019L);
}

// log2(1 + x), stable for small x.
template <typename Scalar>
Scalar log2_1p(Scalar x) {
  return std::log1p(x) * log2e<Scalar>();
}

inline int checked_ceil(double ratio) {
  // Values within 1e-9 (relative) of an integer are treated as that integer.
  return static_cast<int>(std::ceil(ratio - 1e-9 * std::max(1.0, std::abs(ratio))));
}

// Minimum N such that the per-slot displacement S_max = V*T/N keeps
// S_max/H at or below the accuracy threshold.
template <typename Scalar>
int min_slots_for_accuracy(Scalar max_speed, Scalar period, Scalar altitude, Scalar accuracy) {
  if (!(max_speed > Scalar(0)) || !(period > Scalar(0)) || !(altitude > Scalar(0)) ||
      !(accuracy > Scalar(0))) {
    throw std::domain_error("min_slots_for_accuracy: all arguments must be positive");
  }
  return checked_ceil(static_cast<double>(max_speed * period / (altitude * accuracy)));
}

// Immutable problem instance. Everything downstream treats a validated
// Scenario as read-only shared state.
template <typename Scalar>
struct Scenario {
  Points<Scalar> user_positions;       // 2 x K, meters
  int num_uavs = 1;                    // M
  Scalar altitude = Scalar(100);       // H, meters
  Scalar period = Scalar(100);         // T, seconds
  int num_slots = 2;                   // N
  Scalar max_speed = Scalar(50);       // V_max, m/s
  Scalar min_separation = Scalar(100); // d_min, meters
  Scalar max_power = Scalar(0.1);      // P_max, watts
  Scalar noise_power = Scalar(1e-14);  // sigma^2, watts
  Scalar ref_channel_gain = Scalar(1e-6);          // rho_0, linear gain at 1 m
  Scalar discretization_threshold = Scalar(0.5);   // eps_max
  Scalar convergence_threshold = Scalar(1e-4);     // eps for the BCD loop
  int subslot_factor = 100;            // tau

  int num_users() const { return static_cast<int>(user_positions.cols()); }
  Scalar slot_length() const { return period / Scalar(num_slots); }
  Scalar max_step() const { return max_speed * slot_length(); }  // S_max

  Vector2<Scalar> user(int k) const { return user_positions.col(k); }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument("scenario: field '" + field + "' " + why);
    };
    if (num_users() < 1) fail("user_positions", "must contain at least one user");
    if (!user_positions.allFinite()) fail("user_positions", "must be finite");
    if (num_uavs < 1) fail("num_uavs", "must be >= 1");
    if (!(altitude > Scalar(0))) fail("altitude", "must be > 0");
    if (!(period > Scalar(0))) fail("period", "must be > 0");
    if (num_slots < 2) fail("num_slots", "must be >= 2");
    if (!(max_speed > Scalar(0))) fail("max_speed", "must be > 0");
    if (!(min_separation > Scalar(0))) fail("min_separation", "must be > 0");
    if (!(max_power > Scalar(0))) fail("max_power", "must be > 0");
    if (!(noise_power > Scalar(0))) fail("noise_power", "must be > 0");
    if (!(ref_channel_gain > Scalar(0))) fail("ref_channel_gain", "must be > 0");
    if (!(discretization_threshold > Scalar(0))) fail("discretization_threshold", "must be > 0");
    if (!(convergence_threshold > Scalar(0))) fail("convergence_threshold", "must be > 0");
    if (subslot_factor < 1) fail("subslot_factor", "must be >= 1");
    const int n_min = min_slots_for_accuracy(max_speed, period, altitude, discretization_threshold);
    if (num_slots < n_min) {
      fail("num_slots", "must be >= " + std::to_string(n_min) +
                            " for the requested discretization accuracy");
    }
  }
};

// Per-UAV waypoints at fixed altitude; rows are UAVs, columns are slots.
template <typename Scalar>
struct Trajectory {
  Matrix<Scalar> x;  // M x N, meters
  Matrix<Scalar> y;  // M x N, meters

  Trajectory() = default;
  Trajectory(int num_uavs, int num_slots)
      : x(Matrix<Scalar>::Zero(num_uavs, num_slots)),
        y(Matrix<Scalar>::Zero(num_uavs, num_slots)) {}

  int num_uavs() const { return static_cast<int>(x.rows()); }
  int num_slots() const { return static_cast<int>(x.cols()); }

  Vector2<Scalar> waypoint(int m, int n) const { return Vector2<Scalar>(x(m, n), y(m, n)); }
  void set_waypoint(int m, int n, const Vector2<Scalar>& p) {
    x(m, n) = p.x();
    y(m, n) = p.y();
  }

  // Every UAV parked at a fixed point for the whole period.
  static Trajectory constant(const Points<Scalar>& positions, int num_slots) {
    Trajectory t(static_cast<int>(positions.cols()), num_slots);
    t.x = positions.row(0).transpose().replicate(1, num_slots);
    t.y = positions.row(1).transpose().replicate(1, num_slots);
    return t;
  }
};

// Per-UAV, per-slot transmit power in watts.
template <typename Scalar>
struct PowerProfile {
  Matrix<Scalar> levels;  // M x N

  PowerProfile() = default;
  explicit PowerProfile(Matrix<Scalar> p) : levels(std::move(p)) {}

  int num_uavs() const { return static_cast<int>(levels.rows()); }
  int num_slots() const { return static_cast<int>(levels.cols()); }

  static PowerProfile full(const Scenario<Scalar>& scn) {
    return PowerProfile(
        Matrix<Scalar>::Constant(scn.num_uavs, scn.num_slots, scn.max_power));
  }
};

enum class ScheduleMode { relaxed, binary };

// User/UAV association weights alpha_{k,m}[n]; one K-by-M matrix per slot.
template <typename Scalar>
struct Schedule {
  SlotStack<Scalar> weights;
  ScheduleMode mode = ScheduleMode::relaxed;

  Schedule() = default;
  Schedule(int num_users, int num_uavs, int num_slots, ScheduleMode md = ScheduleMode::relaxed)
      : weights(num_slots, Matrix<Scalar>::Zero(num_users, num_uavs)), mode(md) {}

  int num_slots() const { return static_cast<int>(weights.size()); }
  int num_users() const { return weights.empty() ? 0 : static_cast<int>(weights[0].rows()); }
  int num_uavs() const { return weights.empty() ? 0 : static_cast<int>(weights[0].cols()); }

  Scalar weight(int k, int m, int n) const { return weights[n](k, m); }
  Scalar& weight(int k, int m, int n) { return weights[n](k, m); }
};

// Rates realized by a (schedule, trajectory, power) triple.
template <typename Scalar>
struct RateReport {
  Matrix<Scalar> per_slot_rates;  // K x N, bps/Hz
  Vector<Scalar> average_rates;   // K
  Scalar min_rate = Scalar(0);    // eta
};

enum class ConstraintKind {
  shape,
  schedule_bounds,
  schedule_binary,
  schedule_uav_sum,
  schedule_user_sum,
  trajectory_periodicity,
  trajectory_speed,
  trajectory_separation,
  power_box,
};

inline const char* constraint_kind_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::shape: return "shape";
    case ConstraintKind::schedule_bounds: return "schedule_bounds";
    case ConstraintKind::schedule_binary: return "schedule_binary";
    case ConstraintKind::schedule_uav_sum: return "schedule_uav_sum";
    case ConstraintKind::schedule_user_sum: return "schedule_user_sum";
    case ConstraintKind::trajectory_periodicity: return "trajectory_periodicity";
    case ConstraintKind::trajectory_speed: return "trajectory_speed";
    case ConstraintKind::trajectory_separation: return "trajectory_separation";
    case ConstraintKind::power_box: return "power_box";
  }
  return "unknown";
}

// One breached constraint. Indices that do not apply are -1.
struct Violation {
  ConstraintKind kind;
  int user = -1;
  int uav = -1;
  int other_uav = -1;
  int slot = -1;
  double magnitude = 0.0;  // size of the breach in the constraint's units

  std::string describe() const {
    std::string s = constraint_kind_name(kind);
    if (user >= 0) s += " user=" + std::to_string(user);
    if (uav >= 0) s += " uav=" + std::to_string(uav);
    if (other_uav >= 0) s += " other_uav=" + std::to_string(other_uav);
    if (slot >= 0) s += " slot=" + std::to_string(slot);
    s += " magnitude=" + std::to_string(magnitude);
    return s;
  }
};

}  // namespace uavnet
