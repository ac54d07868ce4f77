// SPDX-License-Identifier: Apache-2.0
//
// Dense two-phase primal simplex for the small LPs this project produces
// (at most a few thousand variables). Dantzig pricing with a permanent
// switch to Bland's rule once the objective stalls, so cycling cannot
// occur; all ties break toward the lowest variable index for determinism.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/convex/outcome.hpp"
#include "uavnet/types.hpp"

namespace uavnet::convex {

// max c'x  s.t.  lhs * x <= rhs,  x >= 0, optionally x <= upper.
template <typename Scalar>
struct LinearProgram {
  Vector<Scalar> objective;  // c
  Matrix<Scalar> lhs;        // A
  Vector<Scalar> rhs;        // b
  Vector<Scalar> upper;      // empty, or per-variable bound (+inf = unbounded)

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  void validate() const {
    if (lhs.rows() != rhs.size() || lhs.cols() != objective.size()) {
      throw std::invalid_argument("linear program: inconsistent dimensions");
    }
    if (!objective.allFinite() || !lhs.allFinite() || !rhs.allFinite()) {
      throw std::invalid_argument("linear program: coefficients must be finite");
    }
    if (upper.size() != 0 && upper.size() != objective.size()) {
      throw std::invalid_argument("linear program: upper bound size mismatch");
    }
  }
};

template <typename Scalar>
struct LpSettings {
  Scalar tolerance = Scalar(1e-9);
  int max_pivots = 50000;
  // Consecutive stalled pivots before switching to Bland's rule.
  int stall_limit = 40;
};

namespace detail {

template <typename Scalar>
class SimplexTableau {
 public:
  // Rows of `a` are <= constraints against nonnegative variables.
  SimplexTableau(const Matrix<Scalar>& a, const Vector<Scalar>& b, const Vector<Scalar>& c,
                 const LpSettings<Scalar>& settings)
      : settings_(settings),
        num_rows_(static_cast<int>(b.size())),
        num_structural_(static_cast<int>(c.size())),
        cost_(c) {
    row_sign_ = Vector<Scalar>::Ones(num_rows_);
    num_artificial_ = 0;
    for (int i = 0; i < num_rows_; ++i) {
      if (b(i) < Scalar(0)) {
        row_sign_(i) = Scalar(-1);
        ++num_artificial_;
      }
    }
    const int cols = num_structural_ + num_rows_ + num_artificial_ + 1;
    tableau_ = Matrix<Scalar>::Zero(num_rows_ + 1, cols);
    basis_.resize(num_rows_);
    int art = 0;
    for (int i = 0; i < num_rows_; ++i) {
      tableau_.block(i, 0, 1, num_structural_) = row_sign_(i) * a.row(i);
      tableau_(i, num_structural_ + i) = row_sign_(i);  // slack
      tableau_(i, cols - 1) = row_sign_(i) * b(i);
      if (row_sign_(i) < Scalar(0)) {
        const int col = num_structural_ + num_rows_ + art;
        tableau_(i, col) = Scalar(1);
        basis_[i] = col;
        ++art;
      } else {
        basis_[i] = num_structural_ + i;
      }
    }
  }

  SolveOutcome<Scalar> run() {
    SolveOutcome<Scalar> out;
    if (num_artificial_ > 0) {
      load_phase1_objective();
      const auto phase1 = optimize(/*phase1=*/true);
      if (phase1 == LoopExit::iterations) {
        out.status = SolveStatus::max_iters;
        out.diagnostic = "pivot budget exhausted in phase 1";
        return out;
      }
      if (objective_value() < -settings_.tolerance * Scalar(10)) {
        out.status = SolveStatus::infeasible;
        out.iterations = pivots_;
        out.diagnostic = "phase 1 optimum leaves artificials positive";
        return out;
      }
      evict_basic_artificials();
    }
    load_phase2_objective();
    const auto phase2 = optimize(/*phase1=*/false);
    out.iterations = pivots_;
    if (phase2 == LoopExit::unbounded) {
      out.status = SolveStatus::numeric_failure;
      out.diagnostic = "objective unbounded above";
      return out;
    }
    if (phase2 == LoopExit::iterations) {
      out.status = SolveStatus::max_iters;
      out.diagnostic = "pivot budget exhausted";
      return out;
    }
    out.status = SolveStatus::optimal;
    out.solution = extract_solution();
    out.objective = cost_.dot(out.solution);
    out.duals = extract_duals();
    return out;
  }

 private:
  enum class LoopExit { optimal, unbounded, iterations };

  int rhs_col() const { return static_cast<int>(tableau_.cols()) - 1; }
  int num_pivot_cols() const { return static_cast<int>(tableau_.cols()) - 1; }
  Scalar objective_value() const { return tableau_(num_rows_, rhs_col()); }

  bool column_allowed(int j, bool phase1) const {
    if (!phase1 && j >= num_structural_ + num_rows_) return false;  // artificial
    return true;
  }

  void load_phase1_objective() {
    // Maximize -sum(artificials); price out the artificial basis.
    tableau_.row(num_rows_).setZero();
    for (int i = 0; i < num_rows_; ++i) {
      if (basis_[i] >= num_structural_ + num_rows_) {
        tableau_.row(num_rows_) -= tableau_.row(i);
      }
    }
    for (int j = num_structural_ + num_rows_; j < num_pivot_cols(); ++j) {
      tableau_(num_rows_, j) += Scalar(1);
    }
  }

  void load_phase2_objective() {
    tableau_.row(num_rows_).setZero();
    for (int j = 0; j < num_structural_; ++j) tableau_(num_rows_, j) = -cost_(j);
    for (int i = 0; i < num_rows_; ++i) {
      const int b = basis_[i];
      const Scalar cb = b < num_structural_ ? cost_(b) : Scalar(0);
      if (cb != Scalar(0)) tableau_.row(num_rows_) += cb * tableau_.row(i);
    }
    for (int i = 0; i < num_rows_; ++i) tableau_(num_rows_, basis_[i]) = Scalar(0);
  }

  void evict_basic_artificials() {
    for (int i = 0; i < num_rows_; ++i) {
      if (basis_[i] < num_structural_ + num_rows_) continue;
      int enter = -1;
      for (int j = 0; j < num_structural_ + num_rows_; ++j) {
        if (std::abs(tableau_(i, j)) > settings_.tolerance) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        pivot(i, enter);
      }
      // Otherwise the row is redundant; the artificial stays basic at zero
      // and its column is never allowed to re-enter.
    }
  }

  LoopExit optimize(bool phase1) {
    bool bland = false;
    int stalled = 0;
    Scalar last_objective = objective_value();
    while (pivots_ < settings_.max_pivots) {
      const int enter = pick_entering(phase1, bland);
      if (enter < 0) return LoopExit::optimal;
      const int leave = pick_leaving(enter);
      if (leave < 0) return LoopExit::unbounded;
      pivot(leave, enter);
      ++pivots_;
      const Scalar obj = objective_value();
      if (obj <= last_objective + settings_.tolerance * (Scalar(1) + std::abs(obj))) {
        if (++stalled >= settings_.stall_limit) bland = true;
      } else {
        stalled = 0;
      }
      last_objective = obj;
    }
    return LoopExit::iterations;
  }

  int pick_entering(bool phase1, bool bland) const {
    const auto& obj_row = tableau_.row(num_rows_);
    int best = -1;
    Scalar best_val = -settings_.tolerance;
    for (int j = 0; j < num_pivot_cols(); ++j) {
      if (!column_allowed(j, phase1)) continue;
      const Scalar r = obj_row(j);
      if (r < best_val) {
        if (bland) return j;
        best_val = r;
        best = j;
      }
    }
    return best;
  }

  int pick_leaving(int enter) const {
    int leave = -1;
    Scalar best_ratio = Scalar(0);
    for (int i = 0; i < num_rows_; ++i) {
      const Scalar a = tableau_(i, enter);
      if (a <= settings_.tolerance) continue;
      const Scalar ratio = tableau_(i, rhs_col()) / a;
      if (leave < 0) {
        leave = i;
        best_ratio = ratio;
        continue;
      }
      const Scalar tie = settings_.tolerance * (Scalar(1) + std::abs(best_ratio));
      if (ratio < best_ratio - tie) {
        best_ratio = ratio;
        leave = i;
      } else if (ratio <= best_ratio + tie && basis_[i] < basis_[leave]) {
        leave = i;  // lowest-index tie break
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    return leave;
  }

  void pivot(int leave, int enter) {
    tableau_.row(leave) /= tableau_(leave, enter);
    tableau_(leave, enter) = Scalar(1);
    for (int r = 0; r <= num_rows_; ++r) {
      if (r == leave) continue;
      const Scalar f = tableau_(r, enter);
      if (f != Scalar(0)) {
        tableau_.row(r) -= f * tableau_.row(leave);
        tableau_(r, enter) = Scalar(0);
      }
    }
    basis_[leave] = enter;
  }

  Vector<Scalar> extract_solution() const {
    Vector<Scalar> x = Vector<Scalar>::Zero(num_structural_);
    for (int i = 0; i < num_rows_; ++i) {
      if (basis_[i] < num_structural_) x(basis_[i]) = tableau_(i, rhs_col());
    }
    return x;
  }

  Vector<Scalar> extract_duals() const {
    Vector<Scalar> y(num_rows_);
    for (int i = 0; i < num_rows_; ++i) {
      y(i) = row_sign_(i) * tableau_(num_rows_, num_structural_ + i);
    }
    return y;
  }

  LpSettings<Scalar> settings_;
  int num_rows_;
  int num_structural_;
  int num_artificial_;
  Vector<Scalar> cost_;
  Vector<Scalar> row_sign_;
  Matrix<Scalar> tableau_;
  std::vector<int> basis_;
  int pivots_ = 0;
};

}  // namespace detail

template <typename Scalar>
SolveOutcome<Scalar> solve_lp(const LinearProgram<Scalar>& lp,
                              const LpSettings<Scalar>& settings = {}) {
  lp.validate();
  const int n = lp.num_vars();
  const int m = lp.num_rows();

  // Fold finite upper bounds in as extra rows.
  int extra = 0;
  if (lp.upper.size() > 0) {
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(static_cast<double>(lp.upper(j)))) ++extra;
    }
  }
  Matrix<Scalar> a(m + extra, n);
  Vector<Scalar> b(m + extra);
  a.topRows(m) = lp.lhs;
  b.head(m) = lp.rhs;
  int r = m;
  if (extra > 0) {
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(static_cast<double>(lp.upper(j)))) continue;
      a.row(r).setZero();
      a(r, j) = Scalar(1);
      b(r) = lp.upper(j);
      ++r;
    }
  }

  detail::SimplexTableau<Scalar> tableau(a, b, lp.objective, settings);
  SolveOutcome<Scalar> out = tableau.run();
  if (out.status != SolveStatus::optimal) return out;

  // Residuals against the original data: primal feasibility and duality gap.
  Scalar primal_viol = Scalar(0);
  if (m > 0) primal_viol = (lp.lhs * out.solution - lp.rhs).cwiseMax(Scalar(0)).maxCoeff();
  primal_viol = std::max(primal_viol, (-out.solution).cwiseMax(Scalar(0)).maxCoeff());
  const Scalar gap = std::abs(out.objective - b.dot(out.duals)) /
                     (Scalar(1) + std::abs(out.objective));
  out.kkt_residual = std::max(primal_viol, gap);
  out.duals.conservativeResize(m);  // duals of caller-supplied rows only
  return out;
}

}  // namespace uavnet::convex
