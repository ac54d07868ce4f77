// SPDX-License-Identifier: Apache-2.0
//
// Relaxed user scheduling/association for fixed trajectory and power: a
// max-min LP over the per-slot association weights.

#pragma once

#include <stdexcept>
#include <utility>

#include "uavnet/convex/lp.hpp"
#include "uavnet/model.hpp"
#include "uavnet/types.hpp"

namespace uavnet {

using ActiveMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline ActiveMask full_mask(int num_uavs, int num_slots) {
  return ActiveMask::Constant(num_uavs, num_slots, true);
}

}  // namespace uavnet

namespace uavnet::scheduling {

// Per-slot spectral efficiencies r_{k,m}[n] = log2(1 + gamma_{k,m}[n]) plus
// the per-(UAV, slot) availability mask (all-true outside ablations).
template <typename Scalar>
struct SchedulingProblem {
  SlotStack<Scalar> rates;
  ActiveMask active;

  int num_slots() const { return static_cast<int>(rates.size()); }
  int num_users() const { return rates.empty() ? 0 : static_cast<int>(rates[0].rows()); }
  int num_uavs() const { return rates.empty() ? 0 : static_cast<int>(rates[0].cols()); }
};

template <typename Scalar>
struct SchedulingSolution {
  Schedule<Scalar> schedule;  // relaxed mode
  Scalar eta = Scalar(0);
  // Duals of the per-user rate constraints; nonnegative, summing to ~1 at a
  // nondegenerate optimum. Used by optimality certificates.
  Vector<Scalar> rate_duals;
};

template <typename Scalar>
SchedulingProblem<Scalar> build_problem(const Scenario<Scalar>& scn,
                                        const Trajectory<Scalar>& traj,
                                        const PowerProfile<Scalar>& power,
                                        const ActiveMask& mask) {
  SchedulingProblem<Scalar> problem;
  problem.active = mask;
  problem.rates.resize(scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    const Matrix<Scalar> gains = gain_matrix(scn, traj, n);
    const Matrix<Scalar> gamma = sinr_matrix(scn, gains, power, n);
    problem.rates[n] = gamma.unaryExpr([](Scalar g) { return log2_1p(g); });
  }
  return problem;
}

template <typename Scalar>
SchedulingProblem<Scalar> build_problem(const Scenario<Scalar>& scn,
                                        const Trajectory<Scalar>& traj,
                                        const PowerProfile<Scalar>& power) {
  return build_problem(scn, traj, power, full_mask(scn.num_uavs, scn.num_slots));
}

namespace detail {

// Distribute leftover per-UAV capacity to users with spare user capacity.
// Keeps LP optimality (rates only rise, the bottleneck user is unchanged)
// and realizes the met-with-equality structure of the optimum.
template <typename Scalar>
void polish_schedule(Schedule<Scalar>& schedule, const ActiveMask& active) {
  const Scalar tol = Scalar(1e-12);
  for (int n = 0; n < schedule.num_slots(); ++n) {
    auto& w = schedule.weights[n];
    for (int m = 0; m < schedule.num_uavs(); ++m) {
      if (!active(m, n)) continue;
      Scalar slack = Scalar(1) - w.col(m).sum();
      if (slack <= tol) continue;
      for (int k = 0; k < schedule.num_users() && slack > tol; ++k) {
        const Scalar give = std::min(slack, Scalar(1) - w.row(k).sum());
        if (give > tol) {
          w(k, m) += give;
          slack -= give;
        }
      }
    }
  }
}

// Clamp round-off so downstream feasibility checks see exact sums.
template <typename Scalar>
void tidy_schedule(Schedule<Scalar>& schedule) {
  for (int n = 0; n < schedule.num_slots(); ++n) {
    auto& w = schedule.weights[n];
    w = w.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    for (int m = 0; m < w.cols(); ++m) {
      const Scalar s = w.col(m).sum();
      if (s > Scalar(1)) w.col(m) /= s;
    }
    for (int k = 0; k < w.rows(); ++k) {
      const Scalar s = w.row(k).sum();
      if (s > Scalar(1)) w.row(k) /= s;
    }
  }
}

}  // namespace detail

// max eta subject to per-user average rates >= eta, per-slot UAV and user
// capacity rows, alpha in [0,1]. Variable order: alpha by (k, m, n), eta last.
template <typename Scalar>
SchedulingSolution<Scalar> solve(const SchedulingProblem<Scalar>& problem,
                                 const convex::LpSettings<Scalar>& settings = {}) {
  const int num_k = problem.num_users();
  const int num_m = problem.num_uavs();
  const int num_n = problem.num_slots();
  if (num_k == 0 || num_m == 0 || num_n == 0) {
    throw std::invalid_argument("scheduling: empty problem");
  }
  for (const auto& r : problem.rates) {
    if (!r.allFinite() || r.minCoeff() < Scalar(0)) {
      throw std::invalid_argument("scheduling: rate table must be finite and nonnegative");
    }
  }

  SchedulingSolution<Scalar> out;
  out.schedule = Schedule<Scalar>(num_k, num_m, num_n, ScheduleMode::relaxed);
  out.rate_duals = Vector<Scalar>::Zero(num_k);

  Scalar max_rate = Scalar(0);
  for (const auto& r : problem.rates) max_rate = std::max(max_rate, r.maxCoeff());
  if (max_rate <= Scalar(0)) {
    out.eta = Scalar(0);  // all-zero rate table: any feasible schedule works
    return out;
  }

  const auto var = [&](int k, int m, int n) { return (k * num_m + m) * num_n + n; };
  const int num_vars = num_k * num_m * num_n + 1;
  const int eta_var = num_vars - 1;
  const int num_rows = num_k + num_m * num_n + num_k * num_n;

  convex::LinearProgram<Scalar> lp;
  lp.objective = Vector<Scalar>::Zero(num_vars);
  lp.objective(eta_var) = Scalar(1);
  lp.lhs = Matrix<Scalar>::Zero(num_rows, num_vars);
  lp.rhs = Vector<Scalar>::Zero(num_rows);

  int row = 0;
  for (int k = 0; k < num_k; ++k, ++row) {
    for (int m = 0; m < num_m; ++m) {
      for (int n = 0; n < num_n; ++n) {
        lp.lhs(row, var(k, m, n)) = -problem.rates[n](k, m) / Scalar(num_n);
      }
    }
    lp.lhs(row, eta_var) = Scalar(1);
    lp.rhs(row) = Scalar(0);
  }
  for (int m = 0; m < num_m; ++m) {
    for (int n = 0; n < num_n; ++n, ++row) {
      for (int k = 0; k < num_k; ++k) lp.lhs(row, var(k, m, n)) = Scalar(1);
      lp.rhs(row) = problem.active(m, n) ? Scalar(1) : Scalar(0);
    }
  }
  for (int k = 0; k < num_k; ++k) {
    for (int n = 0; n < num_n; ++n, ++row) {
      for (int m = 0; m < num_m; ++m) lp.lhs(row, var(k, m, n)) = Scalar(1);
      lp.rhs(row) = Scalar(1);
    }
  }

  const auto lp_out = convex::solve_lp(lp, settings);
  if (lp_out.status != convex::SolveStatus::optimal) {
    throw std::runtime_error(std::string("scheduling: LP solve failed: ") +
                             convex::status_name(lp_out.status) +
                             (lp_out.diagnostic.empty() ? "" : " (" + lp_out.diagnostic + ")"));
  }

  for (int k = 0; k < num_k; ++k) {
    for (int m = 0; m < num_m; ++m) {
      for (int n = 0; n < num_n; ++n) {
        out.schedule.weights[n](k, m) = lp_out.solution(var(k, m, n));
      }
    }
    out.rate_duals(k) = lp_out.duals(k);
  }
  out.eta = lp_out.objective;
  detail::polish_schedule(out.schedule, problem.active);
  detail::tidy_schedule(out.schedule);
  return out;
}

}  // namespace uavnet::scheduling
