// SPDX-License-Identifier: Apache-2.0
//
// Power-control block of the coordinate-descent loop. Each user rate is a
// difference of concave functions of the transmit powers; the subtracted
// interference log is replaced by its affine upper bound at the expansion
// powers, leaving a convex program over the power box.

#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "uavnet/convex/smooth.hpp"
#include "uavnet/model.hpp"
#include "uavnet/types.hpp"

namespace uavnet::power {

template <typename Scalar>
struct PowerLocalPoint {
  PowerProfile<Scalar> expansion;  // P^r, inside the box
  Schedule<Scalar> schedule;       // fixed A
  Trajectory<Scalar> trajectory;   // fixed Q (hence fixed gains)
};

// Gains and per-(user, serving UAV, slot) interference denominators at the
// expansion point. The affine-bound slope for interferer j against the pair
// (k, m) is slope(k, m, j, n) = h_{k,j}[n] log2(e) / denom(k, m)[n].
template <typename Scalar>
struct InterferenceSlopes {
  SlotStack<Scalar> gains;  // h_{k,j}[n], K x M per slot
  SlotStack<Scalar> denom;  // sum_{l != m} p^r_l[n] h_{k,l}[n] + sigma^2, K x M per slot

  Scalar slope(int k, int m, int j, int n) const {
    return gains[n](k, j) * log2e<Scalar>() / denom[n](k, m);
  }
};

template <typename Scalar>
InterferenceSlopes<Scalar> compute_slopes(const Scenario<Scalar>& scn,
                                          const PowerLocalPoint<Scalar>& local) {
  const int num_m = scn.num_uavs;
  const int num_n = scn.num_slots;
  InterferenceSlopes<Scalar> out;
  out.gains = gain_table(scn, local.trajectory);
  out.denom.resize(num_n);
  for (int n = 0; n < num_n; ++n) {
    const Matrix<Scalar>& h = out.gains[n];
    const Matrix<Scalar> received =
        h.array().rowwise() * local.expansion.levels.col(n).transpose().array();
    const Vector<Scalar> total = received.rowwise().sum();
    Matrix<Scalar>& d = out.denom[n];
    d.resize(scn.num_users(), num_m);
    for (int m = 0; m < num_m; ++m) {
      d.col(m) = total.array() - received.col(m).array() + scn.noise_power;
    }
  }
  return out;
}

// Affine upper bound on the interference log term, per (user, UAV, slot).
template <typename Scalar>
SlotStack<Scalar> interference_upper_bound(const Scenario<Scalar>& scn,
                                           const InterferenceSlopes<Scalar>& slopes,
                                           const PowerProfile<Scalar>& p,
                                           const PowerLocalPoint<Scalar>& local) {
  const int num_k = scn.num_users();
  const int num_m = scn.num_uavs;
  SlotStack<Scalar> out(scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    Matrix<Scalar>& ub = out[n];
    ub.resize(num_k, num_m);
    for (int m = 0; m < num_m; ++m) {
      ub.col(m) = slopes.denom[n].col(m).array().log() * log2e<Scalar>();
      for (int j = 0; j < num_m; ++j) {
        if (j == m) continue;
        const Scalar dp = p.levels(j, n) - local.expansion.levels(j, n);
        ub.col(m).array() +=
            slopes.gains[n].col(j).array() * log2e<Scalar>() / slopes.denom[n].col(m).array() * dp;
      }
    }
  }
  return out;
}

// The exact interference log term, per (user, UAV, slot).
template <typename Scalar>
SlotStack<Scalar> interference_log(const Scenario<Scalar>& scn,
                                   const InterferenceSlopes<Scalar>& slopes,
                                   const PowerProfile<Scalar>& p) {
  const int num_m = scn.num_uavs;
  SlotStack<Scalar> out(scn.num_slots);
  for (int n = 0; n < scn.num_slots; ++n) {
    const Matrix<Scalar> received =
        slopes.gains[n].array().rowwise() * p.levels.col(n).transpose().array();
    const Vector<Scalar> total = received.rowwise().sum();
    Matrix<Scalar>& v = out[n];
    v.resize(scn.num_users(), num_m);
    for (int m = 0; m < num_m; ++m) {
      v.col(m) = (total.array() - received.col(m).array() + scn.noise_power).log() *
                 log2e<Scalar>();
    }
  }
  return out;
}

// Variable layout: one scaled power per active (UAV, slot), eta last.
// UAV/slot pairs fixed at zero (orthogonal-transmission masks) carry no
// variable at all.
struct PowerLayout {
  int num_uavs = 0;
  int num_slots = 0;
  std::vector<int> var_of;  // (m * num_slots + n) -> variable index or -1
  int eta = 0;

  int var(int m, int n) const { return var_of[m * num_slots + n]; }
  int num_vars() const { return eta + 1; }
};

template <typename Scalar>
struct PowerSubproblem {
  convex::SmoothConvexProgram<Scalar> program;
  PowerLayout layout;
  Matrix<Scalar> upper;  // effective per-(m,n) cap in watts
};

template <typename Scalar>
PowerSubproblem<Scalar> build_subproblem(const Scenario<Scalar>& scn,
                                         const PowerLocalPoint<Scalar>& local,
                                         const InterferenceSlopes<Scalar>& slopes,
                                         const Matrix<Scalar>& upper_bounds) {
  using convex::FunctionalPtr;
  using convex::LinearFunctional;
  using convex::NegLogAffineFunctional;
  using convex::SumFunctional;

  const int num_k = scn.num_users();
  const int num_m = scn.num_uavs;
  const int num_n = scn.num_slots;
  const Scalar pmax = scn.max_power;

  PowerSubproblem<Scalar> sub;
  sub.upper = upper_bounds.cwiseMin(pmax).cwiseMax(Scalar(0));
  auto& layout = sub.layout;
  layout.num_uavs = num_m;
  layout.num_slots = num_n;
  layout.var_of.assign(num_m * num_n, -1);
  int next = 0;
  for (int m = 0; m < num_m; ++m) {
    for (int n = 0; n < num_n; ++n) {
      if (sub.upper(m, n) > Scalar(0)) layout.var_of[m * num_n + n] = next++;
    }
  }
  layout.eta = next;

  auto& prog = sub.program;
  prog.num_vars = layout.num_vars();
  prog.objective = std::make_shared<const LinearFunctional<Scalar>>(
      std::vector<int>{layout.eta}, std::vector<Scalar>{Scalar(1)});

  // Per-user rate constraints.
  for (int k = 0; k < num_k; ++k) {
    std::vector<FunctionalPtr<Scalar>> parts;
    Scalar constant = Scalar(0);
    std::vector<typename NegLogAffineFunctional<Scalar>::Term> log_terms;
    Vector<Scalar> lin = Vector<Scalar>::Zero(prog.num_vars);

    for (int n = 0; n < num_n; ++n) {
      const Scalar alpha_total = local.schedule.weights[n].row(k).sum();
      if (alpha_total > Scalar(0)) {
        // -(alpha/N) log2(sum_j p_j h_kj + sigma^2): affine in scaled powers.
        typename NegLogAffineFunctional<Scalar>::Term term;
        term.weight = alpha_total / Scalar(num_n);
        term.offset = scn.noise_power;
        for (int j = 0; j < num_m; ++j) {
          const int v = layout.var(j, n);
          if (v < 0) continue;
          term.indices.push_back(v);
          term.coeffs.push_back(slopes.gains[n](k, j) * pmax);
        }
        if (!term.indices.empty()) {
          log_terms.push_back(std::move(term));
        } else {
          constant -= alpha_total / Scalar(num_n) * std::log2(scn.noise_power);
        }
      }
      // + (alpha/N) * Rub terms.
      for (int m = 0; m < num_m; ++m) {
        const Scalar alpha = local.schedule.weights[n](k, m);
        if (alpha <= Scalar(0)) continue;
        constant += alpha / Scalar(num_n) * std::log2(slopes.denom[n](k, m));
        for (int j = 0; j < num_m; ++j) {
          if (j == m) continue;
          const Scalar d = slopes.slope(k, m, j, n);
          constant -= alpha / Scalar(num_n) * d * local.expansion.levels(j, n);
          const int v = layout.var(j, n);
          if (v >= 0) lin(v) += alpha / Scalar(num_n) * d * pmax;
        }
      }
    }

    std::vector<int> lin_idx{layout.eta};
    std::vector<Scalar> lin_coef{Scalar(1)};
    for (int v = 0; v < layout.eta; ++v) {
      if (lin(v) != Scalar(0)) {
        lin_idx.push_back(v);
        lin_coef.push_back(lin(v));
      }
    }
    parts.push_back(std::make_shared<const LinearFunctional<Scalar>>(
        std::move(lin_idx), std::move(lin_coef), constant));
    if (!log_terms.empty()) {
      parts.push_back(std::make_shared<const NegLogAffineFunctional<Scalar>>(std::move(log_terms)));
    }
    prog.constraints.push_back(std::make_shared<const SumFunctional<Scalar>>(std::move(parts)));
  }

  // Box rows for active variables, in scaled units.
  for (int m = 0; m < num_m; ++m) {
    for (int n = 0; n < num_n; ++n) {
      const int v = layout.var(m, n);
      if (v < 0) continue;
      prog.constraints.push_back(std::make_shared<const LinearFunctional<Scalar>>(
          std::vector<int>{v}, std::vector<Scalar>{Scalar(-1)}, Scalar(0)));
      prog.constraints.push_back(std::make_shared<const LinearFunctional<Scalar>>(
          std::vector<int>{v}, std::vector<Scalar>{Scalar(1)}, -sub.upper(m, n) / pmax));
    }
  }

  // Start: expansion powers nudged inside the box, eta below the bound value.
  Vector<Scalar> start = Vector<Scalar>::Zero(prog.num_vars);
  for (int m = 0; m < num_m; ++m) {
    for (int n = 0; n < num_n; ++n) {
      const int v = layout.var(m, n);
      if (v < 0) continue;
      const Scalar ub = sub.upper(m, n) / pmax;
      const Scalar margin = std::min(Scalar(1e-6), ub / Scalar(4));
      start(v) = std::min(std::max(local.expansion.levels(m, n) / pmax, margin), ub - margin);
    }
  }
  Scalar min_lhs = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < num_k; ++k) min_lhs = std::min(min_lhs, -prog.constraints[k]->value(start));
  start(layout.eta) = min_lhs - std::max(Scalar(1e-9), Scalar(1e-9) * std::abs(min_lhs));
  prog.start = start;
  return sub;
}

template <typename Scalar>
PowerSubproblem<Scalar> build_subproblem(const Scenario<Scalar>& scn,
                                         const PowerLocalPoint<Scalar>& local,
                                         const InterferenceSlopes<Scalar>& slopes) {
  const Matrix<Scalar> full =
      Matrix<Scalar>::Constant(scn.num_uavs, scn.num_slots, scn.max_power);
  return build_subproblem(scn, local, slopes, full);
}

template <typename Scalar>
struct PowerStep {
  PowerProfile<Scalar> power;
  Scalar eta = Scalar(0);  // true objective at the returned powers
  bool improved = false;
  bool warning = false;
};

// One SCA step on the powers; output is box-exact (near-boundary values are
// snapped) and never worse than the expansion point.
template <typename Scalar>
PowerStep<Scalar> solve_block(const Scenario<Scalar>& scn, const PowerLocalPoint<Scalar>& local,
                              const Matrix<Scalar>& upper_bounds,
                              const convex::SmoothSettings<Scalar>& settings = {}) {
  PowerStep<Scalar> step;
  const Scalar eta_ref =
      evaluate_rates(scn, local.schedule, local.trajectory, local.expansion).min_rate;
  step.power = local.expansion;
  step.eta = eta_ref;

  try {
    const auto slopes = compute_slopes(scn, local);
    auto sub = build_subproblem(scn, local, slopes, upper_bounds);
    const auto outcome = convex::solve_smooth(sub.program, settings);

    PowerProfile<Scalar> raw(Matrix<Scalar>::Zero(scn.num_uavs, scn.num_slots));
    for (int m = 0; m < scn.num_uavs; ++m) {
      for (int n = 0; n < scn.num_slots; ++n) {
        const int v = sub.layout.var(m, n);
        raw.levels(m, n) = v >= 0 ? outcome.solution(v) * scn.max_power : Scalar(0);
      }
    }
    PowerProfile<Scalar> snapped = raw;
    const Scalar snap = Scalar(1e-4) * scn.max_power;
    for (int m = 0; m < scn.num_uavs; ++m) {
      for (int n = 0; n < scn.num_slots; ++n) {
        const Scalar ub = sub.upper(m, n);
        Scalar& p = snapped.levels(m, n);
        if (p < snap) p = Scalar(0);
        if (p > ub - snap) p = ub;
      }
    }
    // Powers with no objective pressure (slots whose served user is not the
    // bottleneck) drift toward the barrier's analytic center; the lifted
    // candidate restores them to the expansion level, which breaks ties
    // deterministically and keeps interference-free runs at full power.
    PowerProfile<Scalar> lifted = snapped;
    lifted.levels =
        lifted.levels.cwiseMax(local.expansion.levels).cwiseMin(sub.upper);
    const PowerProfile<Scalar>* candidates[] = {&lifted, &snapped, &raw};
    const PowerProfile<Scalar>* best = nullptr;
    Scalar eta_best = Scalar(0);
    for (const auto* candidate : candidates) {
      const Scalar eta =
          evaluate_rates(scn, local.schedule, local.trajectory, *candidate).min_rate;
      if (best == nullptr ||
          eta > eta_best + Scalar(1e-12) * (Scalar(1) + std::abs(eta_best))) {
        eta_best = eta;
        best = candidate;
      }
    }
    if (eta_best >= eta_ref) {
      step.power = *best;
      step.eta = eta_best;
      step.improved = eta_best > eta_ref;
      return step;
    }
  } catch (const std::exception&) {
    // fall through to the safe no-op step
  }
  step.warning = true;
  return step;
}

template <typename Scalar>
PowerStep<Scalar> solve_block(const Scenario<Scalar>& scn, const PowerLocalPoint<Scalar>& local,
                              const convex::SmoothSettings<Scalar>& settings = {}) {
  const Matrix<Scalar> full =
      Matrix<Scalar>::Constant(scn.num_uavs, scn.num_slots, scn.max_power);
  return solve_block(scn, local, full, settings);
}

}  // namespace uavnet::power
