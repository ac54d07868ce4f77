// SPDX-License-Identifier: Apache-2.0
//
// Trajectory block of the coordinate-descent loop. The non-convex rate
// constraints are replaced at the expansion trajectory by their global
// first-order lower bound in the squared UAV-user distances, interference
// distances get one shared slack per (user, UAV, slot), and the minimum
// separation constraint is linearized at the expansion pair positions. The
// resulting program is convex and tight at the expansion point.

#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "uavnet/convex/smooth.hpp"
#include "uavnet/model.hpp"
#include "uavnet/types.hpp"

namespace uavnet::trajectory {

template <typename Scalar>
struct TrajectoryLocalPoint {
  Trajectory<Scalar> expansion;  // Q^r, feasible for the trajectory constraints
  Schedule<Scalar> schedule;     // fixed A
  PowerProfile<Scalar> power;    // fixed P
};

// First-order coefficients of the rate bound at the expansion point.
// slope(k, j)[n] is the per-m^2 sensitivity of user k's total received-power
// log to UAV j's squared distance; offset(k, n) is the log value itself at
// the expansion point (the paper's per-(k,j) offset is j-independent, so one
// value per (user, slot) is stored).
template <typename Scalar>
struct TaylorCoefficients {
  SlotStack<Scalar> slope;   // K x M per slot, > 0 wherever p_j[n] > 0
  Matrix<Scalar> offset;     // K x N, bps/Hz
};

// Squared horizontal distances ||q_j[n] - w_k||^2 for every (k, j, n).
template <typename Scalar>
SlotStack<Scalar> squared_distances(const Scenario<Scalar>& scn, const Trajectory<Scalar>& traj) {
  SlotStack<Scalar> out(traj.num_slots());
  for (int n = 0; n < traj.num_slots(); ++n) {
    Matrix<Scalar> d2(scn.num_users(), traj.num_uavs());
    for (int j = 0; j < traj.num_uavs(); ++j) {
      const auto dx = scn.user_positions.row(0).array() - traj.x(j, n);
      const auto dy = scn.user_positions.row(1).array() - traj.y(j, n);
      d2.col(j) = (dx.square() + dy.square()).transpose();
    }
    out[n] = d2;
  }
  return out;
}

// log2 of total received power plus noise per (user, slot): the concave part
// of the rate split whose lower bound the subproblem uses.
template <typename Scalar>
Matrix<Scalar> total_power_log(const Scenario<Scalar>& scn, const Trajectory<Scalar>& traj,
                               const PowerProfile<Scalar>& power) {
  Matrix<Scalar> out(scn.num_users(), scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    const Matrix<Scalar> gains = gain_matrix(scn, traj, n);
    out.col(n) = ((gains.array().rowwise() * power.levels.col(n).transpose().array())
                      .rowwise()
                      .sum() +
                  scn.noise_power)
                     .log() *
                 log2e<Scalar>();
  }
  return out;
}

template <typename Scalar>
TaylorCoefficients<Scalar> compute_taylor_coeffs(const Scenario<Scalar>& scn,
                                                 const TrajectoryLocalPoint<Scalar>& local) {
  const int num_k = scn.num_users();
  const int num_m = scn.num_uavs;
  const int num_n = scn.num_slots;
  const Scalar h2 = scn.altitude * scn.altitude;
  TaylorCoefficients<Scalar> coeffs;
  coeffs.slope.resize(num_n);
  coeffs.offset.resize(num_k, num_n);

  const SlotStack<Scalar> d2 = squared_distances(scn, local.expansion);
  for (int n = 0; n < num_n; ++n) {
    Matrix<Scalar> received(num_k, num_m);  // p_j rho0 / (H^2 + d^2)
    for (int j = 0; j < num_m; ++j) {
      received.col(j) =
          local.power.levels(j, n) * scn.ref_channel_gain / (h2 + d2[n].col(j).array());
    }
    const Vector<Scalar> denom = received.rowwise().sum().array() + scn.noise_power;
    coeffs.offset.col(n) = denom.array().log() * log2e<Scalar>();
    Matrix<Scalar>& a = coeffs.slope[n];
    a.resize(num_k, num_m);
    for (int j = 0; j < num_m; ++j) {
      a.col(j) = received.col(j).array() / (h2 + d2[n].col(j).array()) * log2e<Scalar>() /
                 denom.array();
    }
  }
  return coeffs;
}

// Concave lower bound on total_power_log at arbitrary Q, per (user, slot).
template <typename Scalar>
Matrix<Scalar> rate_lower_bound(const Scenario<Scalar>& scn,
                                const TaylorCoefficients<Scalar>& coeffs,
                                const Trajectory<Scalar>& q,
                                const TrajectoryLocalPoint<Scalar>& local) {
  const SlotStack<Scalar> d2 = squared_distances(scn, q);
  const SlotStack<Scalar> d2_ref = squared_distances(scn, local.expansion);
  Matrix<Scalar> out = coeffs.offset;
  for (int n = 0; n < scn.num_slots; ++n) {
    out.col(n) -= (coeffs.slope[n].array() * (d2[n] - d2_ref[n]).array()).rowwise().sum().matrix();
  }
  return out;
}

// Index layout of the subproblem's variable vector. Positions are scaled by
// the altitude, slacks by its square; slot N-1 aliases slot 0 so the
// periodicity constraint holds by construction.
template <typename Scalar>
struct TrajectoryLayout {
  int num_uavs = 0;
  int num_users = 0;
  int num_slots = 0;   // N of the scenario
  int free_slots = 0;  // N - 1

  int slot_var(int n) const { return n % free_slots; }
  int qx(int m, int n) const { return 2 * (m * free_slots + slot_var(n)); }
  int qy(int m, int n) const { return qx(m, n) + 1; }
  int slack(int k, int j, int n) const {
    return 2 * num_uavs * free_slots + (k * num_uavs + j) * free_slots + slot_var(n);
  }
  int eta() const {
    const int s = num_uavs >= 2 ? num_users * num_uavs * free_slots : 0;
    return 2 * num_uavs * free_slots + s;
  }
  int num_vars() const { return eta() + 1; }
  bool has_slacks() const { return num_uavs >= 2; }
};

template <typename Scalar>
struct TrajectorySubproblem {
  convex::SmoothConvexProgram<Scalar> program;
  TrajectoryLayout<Scalar> layout;
};

namespace detail {

// Slack variables sit in (-1/2, cap]; the floor keeps the barrier centered
// for slacks that appear in no rate term. Negative slack values are sound:
// the bound chain only needs S <= ||q_j - w_k||^2.
constexpr double kSlackFloor = -0.5;

}  // namespace detail

template <typename Scalar>
TrajectorySubproblem<Scalar> build_subproblem(const Scenario<Scalar>& scn,
                                              const TrajectoryLocalPoint<Scalar>& local,
                                              const TaylorCoefficients<Scalar>& coeffs) {
  using convex::FunctionalPtr;
  using convex::LinearFunctional;
  using convex::LogRecipSumFunctional;
  using convex::SquareSumFunctional;
  using convex::SumFunctional;
  using convex::WeightedSquareFunctional;

  const int num_k = scn.num_users();
  const int num_m = scn.num_uavs;
  const int num_n = scn.num_slots;
  const Scalar h = scn.altitude;
  const Scalar h2 = h * h;

  TrajectorySubproblem<Scalar> sub;
  auto& layout = sub.layout;
  layout.num_uavs = num_m;
  layout.num_users = num_k;
  layout.num_slots = num_n;
  layout.free_slots = num_n - 1;
  auto& prog = sub.program;
  prog.num_vars = layout.num_vars();
  prog.objective = std::make_shared<const LinearFunctional<Scalar>>(
      std::vector<int>{layout.eta()}, std::vector<Scalar>{Scalar(1)});

  const SlotStack<Scalar> d2_ref = squared_distances(scn, local.expansion);
  const Scalar g0 = scn.ref_channel_gain / h2;  // gain at zero horizontal offset

  // Per-user rate constraints: eta + quadratic distance terms + slack logs.
  for (int k = 0; k < num_k; ++k) {
    std::vector<FunctionalPtr<Scalar>> parts;
    Scalar constant = Scalar(0);

    // Quadratic weights accumulated per (UAV, free slot); slot N-1 folds
    // onto slot 0.
    Matrix<Scalar> quad_w = Matrix<Scalar>::Zero(num_m, layout.free_slots);
    for (int n = 0; n < num_n; ++n) {
      const Scalar alpha_total = local.schedule.weights[n].row(k).sum();
      if (alpha_total <= Scalar(0)) continue;
      constant -= alpha_total / Scalar(num_n) * coeffs.offset(k, n);
      for (int j = 0; j < num_m; ++j) {
        const Scalar a_scaled = coeffs.slope[n](k, j) * h2;
        quad_w(j, layout.slot_var(n)) += alpha_total / Scalar(num_n) * a_scaled;
        constant -= alpha_total / Scalar(num_n) * a_scaled * d2_ref[n](k, j) / h2;
      }
    }
    std::vector<int> sq_idx;
    std::vector<Scalar> sq_w, sq_c;
    for (int j = 0; j < num_m; ++j) {
      for (int nv = 0; nv < layout.free_slots; ++nv) {
        if (quad_w(j, nv) <= Scalar(0)) continue;
        sq_idx.push_back(layout.qx(j, nv));
        sq_w.push_back(quad_w(j, nv));
        sq_c.push_back(scn.user_positions(0, k) / h);
        sq_idx.push_back(layout.qy(j, nv));
        sq_w.push_back(quad_w(j, nv));
        sq_c.push_back(scn.user_positions(1, k) / h);
      }
    }
    if (!sq_idx.empty()) {
      parts.push_back(std::make_shared<const WeightedSquareFunctional<Scalar>>(
          std::move(sq_idx), std::move(sq_w), std::move(sq_c)));
    }

    // Interference logs over the shared slacks, one per served (m, n).
    for (int n = 0; n < num_n; ++n) {
      for (int m = 0; m < num_m; ++m) {
        const Scalar alpha = local.schedule.weights[n](k, m);
        if (alpha <= Scalar(0)) continue;
        if (num_m == 1) {
          constant += alpha / Scalar(num_n) * std::log2(scn.noise_power);
          continue;
        }
        std::vector<int> idx;
        std::vector<Scalar> numerators, offsets;
        for (int j = 0; j < num_m; ++j) {
          if (j == m || local.power.levels(j, n) <= Scalar(0)) continue;
          idx.push_back(layout.slack(k, j, n));
          numerators.push_back(local.power.levels(j, n) * g0);
          offsets.push_back(Scalar(1));
        }
        if (idx.empty()) {
          constant += alpha / Scalar(num_n) * std::log2(scn.noise_power);
        } else {
          parts.push_back(std::make_shared<const LogRecipSumFunctional<Scalar>>(
              alpha / Scalar(num_n), std::move(idx), std::move(numerators), std::move(offsets),
              scn.noise_power));
        }
      }
    }

    parts.insert(parts.begin(),
                 std::make_shared<const LinearFunctional<Scalar>>(
                     std::vector<int>{layout.eta()}, std::vector<Scalar>{Scalar(1)}, constant));
    prog.constraints.push_back(std::make_shared<const SumFunctional<Scalar>>(std::move(parts)));
  }

  // Slack caps (linearized squared distance) and floors.
  if (layout.has_slacks()) {
    for (int k = 0; k < num_k; ++k) {
      for (int j = 0; j < num_m; ++j) {
        for (int nv = 0; nv < layout.free_slots; ++nv) {
          const Vector2<Scalar> a =
              (local.expansion.waypoint(j, nv) - scn.user(k)) / h;  // q~^r - w~
          const Scalar u_ref = a.squaredNorm();
          // S <= u_ref + 2 a'(q - q^r)  with everything in scaled units.
          const Scalar q_ref_term =
              Scalar(2) * (a.x() * local.expansion.x(j, nv) + a.y() * local.expansion.y(j, nv)) / h;
          prog.constraints.push_back(std::make_shared<const LinearFunctional<Scalar>>(
              std::vector<int>{layout.slack(k, j, nv), layout.qx(j, nv), layout.qy(j, nv)},
              std::vector<Scalar>{Scalar(1), -Scalar(2) * a.x(), -Scalar(2) * a.y()},
              q_ref_term - u_ref));
          prog.constraints.push_back(std::make_shared<const LinearFunctional<Scalar>>(
              std::vector<int>{layout.slack(k, j, nv)}, std::vector<Scalar>{Scalar(-1)},
              Scalar(detail::kSlackFloor)));
        }
      }
    }
  }

  // Speed caps across consecutive free slots, including the wrap hop.
  const Scalar step2 = (scn.max_step() / h) * (scn.max_step() / h);
  for (int m = 0; m < num_m; ++m) {
    for (int nv = 0; nv < layout.free_slots; ++nv) {
      const int nxt = (nv + 1) % layout.free_slots;
      if (nxt == nv) continue;  // N == 2: single waypoint, no hop
      std::vector<typename SquareSumFunctional<Scalar>::Term> terms = {
          {layout.qx(m, nv), layout.qx(m, nxt), Scalar(0)},
          {layout.qy(m, nv), layout.qy(m, nxt), Scalar(0)}};
      prog.constraints.push_back(
          std::make_shared<const SquareSumFunctional<Scalar>>(std::move(terms), step2));
    }
  }

  // Linearized pairwise separation, ordered pairs only.
  const Scalar dmin2 = (scn.min_separation / h) * (scn.min_separation / h);
  for (int nv = 0; nv < layout.free_slots; ++nv) {
    for (int j = 0; j < num_m; ++j) {
      for (int m = j + 1; m < num_m; ++m) {
        const Vector2<Scalar> delta =
            (local.expansion.waypoint(m, nv) - local.expansion.waypoint(j, nv)) / h;
        prog.constraints.push_back(std::make_shared<const LinearFunctional<Scalar>>(
            std::vector<int>{layout.qx(m, nv), layout.qy(m, nv), layout.qx(j, nv),
                             layout.qy(j, nv)},
            std::vector<Scalar>{-Scalar(2) * delta.x(), -Scalar(2) * delta.y(),
                                Scalar(2) * delta.x(), Scalar(2) * delta.y()},
            dmin2 + delta.squaredNorm()));
      }
    }
  }

  // Start point: expansion trajectory, slacks just inside their caps, eta
  // just below the bound value there.
  Vector<Scalar> start = Vector<Scalar>::Zero(prog.num_vars);
  for (int m = 0; m < num_m; ++m) {
    for (int nv = 0; nv < layout.free_slots; ++nv) {
      start(layout.qx(m, nv)) = local.expansion.x(m, nv) / h;
      start(layout.qy(m, nv)) = local.expansion.y(m, nv) / h;
    }
  }
  if (layout.has_slacks()) {
    for (int k = 0; k < num_k; ++k) {
      for (int j = 0; j < num_m; ++j) {
        for (int nv = 0; nv < layout.free_slots; ++nv) {
          const Scalar u_ref = d2_ref[nv](k, j) / h2;
          start(layout.slack(k, j, nv)) = u_ref - Scalar(1e-7) * (Scalar(1) + u_ref);
        }
      }
    }
  }
  // eta below the min of the per-user bound values at the start point.
  Scalar min_lhs = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < num_k; ++k) {
    min_lhs = std::min(min_lhs, -prog.constraints[k]->value(start));
  }
  start(layout.eta()) = min_lhs - std::max(Scalar(1e-9), Scalar(1e-9) * std::abs(min_lhs));
  prog.start = start;

  if (!convex::detail::strictly_feasible(prog, prog.start)) {
    throw std::domain_error(
        "trajectory: expansion point is not strictly feasible for the subproblem");
  }
  return sub;
}

template <typename Scalar>
struct TrajectoryStep {
  Trajectory<Scalar> trajectory;
  Scalar eta = Scalar(0);  // true objective at the returned trajectory
  bool improved = false;
  bool warning = false;
};

template <typename Scalar>
Trajectory<Scalar> extract_trajectory(const TrajectoryLayout<Scalar>& layout,
                                      const Vector<Scalar>& x, Scalar altitude) {
  Trajectory<Scalar> traj(layout.num_uavs, layout.num_slots);
  for (int m = 0; m < layout.num_uavs; ++m) {
    for (int n = 0; n < layout.num_slots; ++n) {
      traj.x(m, n) = x(layout.qx(m, n)) * altitude;
      traj.y(m, n) = x(layout.qy(m, n)) * altitude;
    }
  }
  return traj;
}

// One SCA step: solve the convex surrogate at the expansion point and keep
// the result only if the true objective did not decrease.
template <typename Scalar>
TrajectoryStep<Scalar> solve_block(const Scenario<Scalar>& scn,
                                   const TrajectoryLocalPoint<Scalar>& local,
                                   const convex::SmoothSettings<Scalar>& settings = {}) {
  // Corrupt expansion points are rejected, not repaired.
  for (const auto& v : validate_feasibility(scn, local.schedule, local.expansion, local.power)) {
    if (v.kind == ConstraintKind::trajectory_periodicity ||
        v.kind == ConstraintKind::trajectory_speed ||
        v.kind == ConstraintKind::trajectory_separation) {
      throw std::domain_error("trajectory: expansion trajectory violates " +
                              std::string(constraint_kind_name(v.kind)));
    }
  }
  TrajectoryStep<Scalar> step;
  const Scalar eta_ref =
      evaluate_rates(scn, local.schedule, local.expansion, local.power).min_rate;
  step.trajectory = local.expansion;
  step.eta = eta_ref;

  try {
    const auto coeffs = compute_taylor_coeffs(scn, local);
    auto sub = build_subproblem(scn, local, coeffs);
    const auto outcome = convex::solve_smooth(sub.program, settings);
    Trajectory<Scalar> candidate =
        extract_trajectory(sub.layout, outcome.solution, scn.altitude);
    const Scalar eta_new =
        evaluate_rates(scn, local.schedule, candidate, local.power).min_rate;
    if (eta_new >= eta_ref) {
      step.trajectory = std::move(candidate);
      step.eta = eta_new;
      step.improved = eta_new > eta_ref;
      return step;
    }
  } catch (const std::exception&) {
    // fall through to the safe no-op step
  }
  step.warning = true;
  return step;
}

}  // namespace uavnet::trajectory
