// SPDX-License-Identifier: Apache-2.0
//
// Feasible-start log-barrier solver for small dense concave-maximization
// programs: max f0(x) subject to convex g_i(x) <= 0. Newton centering with
// backtracking line search; falls back to a gradient step whenever the
// barrier Hessian cannot produce a descent direction. Returned points are
// never worse than the supplied start point.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "uavnet/convex/outcome.hpp"
#include "uavnet/types.hpp"

namespace uavnet::convex {

enum class TermKind { affine, quadratic, log_form };

// A scalar function with gradient and Hessian accumulation over its support.
// add_* members accumulate w * d{f,grad,hess} into the caller's buffers and
// must write full symmetric Hessian entries.
template <typename Scalar>
class Functional {
 public:
  virtual ~Functional() = default;
  virtual Scalar value(const Vector<Scalar>& x) const = 0;
  virtual void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const = 0;
  virtual void add_hessian(const Vector<Scalar>& x, Scalar w, Matrix<Scalar>& hess) const = 0;
  virtual const std::vector<int>& support() const = 0;
  virtual TermKind kind() const { return TermKind::log_form; }
};

template <typename Scalar>
using FunctionalPtr = std::shared_ptr<const Functional<Scalar>>;

// f(x) = sum_j coeff_j * x_{idx_j} + offset
template <typename Scalar>
class LinearFunctional : public Functional<Scalar> {
 public:
  LinearFunctional(std::vector<int> indices, std::vector<Scalar> coeffs, Scalar offset = Scalar(0))
      : indices_(std::move(indices)), coeffs_(std::move(coeffs)), offset_(offset) {
    if (indices_.size() != coeffs_.size()) {
      throw std::invalid_argument("linear functional: index/coefficient size mismatch");
    }
  }

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = offset_;
    for (size_t i = 0; i < indices_.size(); ++i) v += coeffs_[i] * x(indices_[i]);
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    (void)x;
    for (size_t i = 0; i < indices_.size(); ++i) grad(indices_[i]) += w * coeffs_[i];
  }
  void add_hessian(const Vector<Scalar>&, Scalar, Matrix<Scalar>&) const override {}
  const std::vector<int>& support() const override { return indices_; }
  TermKind kind() const override { return TermKind::affine; }

 private:
  std::vector<int> indices_;
  std::vector<Scalar> coeffs_;
  Scalar offset_;
};

// f(x) = sum_terms (x_a - x_b + shift)^2 - rhs, with b = -1 meaning no
// second variable. Covers per-hop speed caps and distance-ball constraints.
template <typename Scalar>
class SquareSumFunctional : public Functional<Scalar> {
 public:
  struct Term {
    int a;
    int b;  // -1 if absent
    Scalar shift;
  };

  SquareSumFunctional(std::vector<Term> terms, Scalar rhs) : terms_(std::move(terms)), rhs_(rhs) {
    for (const auto& t : terms_) {
      support_.push_back(t.a);
      if (t.b >= 0) support_.push_back(t.b);
    }
    std::sort(support_.begin(), support_.end());
    support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  }

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = -rhs_;
    for (const auto& t : terms_) {
      const Scalar d = x(t.a) - (t.b >= 0 ? x(t.b) : Scalar(0)) + t.shift;
      v += d * d;
    }
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    for (const auto& t : terms_) {
      const Scalar d = x(t.a) - (t.b >= 0 ? x(t.b) : Scalar(0)) + t.shift;
      grad(t.a) += w * Scalar(2) * d;
      if (t.b >= 0) grad(t.b) -= w * Scalar(2) * d;
    }
  }
  void add_hessian(const Vector<Scalar>&, Scalar w, Matrix<Scalar>& hess) const override {
    for (const auto& t : terms_) {
      hess(t.a, t.a) += Scalar(2) * w;
      if (t.b >= 0) {
        hess(t.b, t.b) += Scalar(2) * w;
        hess(t.a, t.b) -= Scalar(2) * w;
        hess(t.b, t.a) -= Scalar(2) * w;
      }
    }
  }
  const std::vector<int>& support() const override { return support_; }
  TermKind kind() const override { return TermKind::quadratic; }

 private:
  std::vector<Term> terms_;
  Scalar rhs_;
  std::vector<int> support_;
};

// f(x) = sum_i w_i (x_{idx_i} - center_i)^2 with w_i >= 0 (convex).
template <typename Scalar>
class WeightedSquareFunctional : public Functional<Scalar> {
 public:
  WeightedSquareFunctional(std::vector<int> indices, std::vector<Scalar> weights,
                           std::vector<Scalar> centers)
      : indices_(std::move(indices)), weights_(std::move(weights)), centers_(std::move(centers)) {
    support_ = indices_;
    std::sort(support_.begin(), support_.end());
    support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  }

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = Scalar(0);
    for (size_t i = 0; i < indices_.size(); ++i) {
      const Scalar d = x(indices_[i]) - centers_[i];
      v += weights_[i] * d * d;
    }
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    for (size_t i = 0; i < indices_.size(); ++i) {
      grad(indices_[i]) += w * Scalar(2) * weights_[i] * (x(indices_[i]) - centers_[i]);
    }
  }
  void add_hessian(const Vector<Scalar>&, Scalar w, Matrix<Scalar>& hess) const override {
    for (size_t i = 0; i < indices_.size(); ++i) {
      hess(indices_[i], indices_[i]) += w * Scalar(2) * weights_[i];
    }
  }
  const std::vector<int>& support() const override { return support_; }
  TermKind kind() const override { return TermKind::quadratic; }

 private:
  std::vector<int> indices_;
  std::vector<Scalar> weights_;
  std::vector<Scalar> centers_;
  std::vector<int> support_;
};

// f(x) = -sum_i w_i (x_i - center_i)^2  (concave; for use as an objective)
template <typename Scalar>
class ConcaveQuadraticObjective : public Functional<Scalar> {
 public:
  ConcaveQuadraticObjective(std::vector<int> indices, std::vector<Scalar> weights,
                            std::vector<Scalar> centers)
      : indices_(std::move(indices)), weights_(std::move(weights)), centers_(std::move(centers)) {}

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = Scalar(0);
    for (size_t i = 0; i < indices_.size(); ++i) {
      const Scalar d = x(indices_[i]) - centers_[i];
      v -= weights_[i] * d * d;
    }
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    for (size_t i = 0; i < indices_.size(); ++i) {
      grad(indices_[i]) -= w * Scalar(2) * weights_[i] * (x(indices_[i]) - centers_[i]);
    }
  }
  void add_hessian(const Vector<Scalar>&, Scalar w, Matrix<Scalar>& hess) const override {
    for (size_t i = 0; i < indices_.size(); ++i) {
      hess(indices_[i], indices_[i]) -= w * Scalar(2) * weights_[i];
    }
  }
  const std::vector<int>& support() const override { return indices_; }
  TermKind kind() const override { return TermKind::quadratic; }

 private:
  std::vector<int> indices_;
  std::vector<Scalar> weights_;
  std::vector<Scalar> centers_;
};

// f(x) = sum_i w_i log2(offset_i + x_i), w_i >= 0 (concave).
template <typename Scalar>
class SumLogObjective : public Functional<Scalar> {
 public:
  SumLogObjective(std::vector<int> indices, std::vector<Scalar> weights,
                  std::vector<Scalar> offsets)
      : indices_(std::move(indices)), weights_(std::move(weights)), offsets_(std::move(offsets)) {}

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = Scalar(0);
    for (size_t i = 0; i < indices_.size(); ++i) {
      const Scalar arg = offsets_[i] + x(indices_[i]);
      if (!(arg > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
      v += weights_[i] * std::log2(arg);
    }
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    for (size_t i = 0; i < indices_.size(); ++i) {
      grad(indices_[i]) += w * weights_[i] * log2e<Scalar>() / (offsets_[i] + x(indices_[i]));
    }
  }
  void add_hessian(const Vector<Scalar>& x, Scalar w, Matrix<Scalar>& hess) const override {
    for (size_t i = 0; i < indices_.size(); ++i) {
      const Scalar arg = offsets_[i] + x(indices_[i]);
      hess(indices_[i], indices_[i]) -= w * weights_[i] * log2e<Scalar>() / (arg * arg);
    }
  }
  const std::vector<int>& support() const override { return indices_; }

 private:
  std::vector<int> indices_;
  std::vector<Scalar> weights_;
  std::vector<Scalar> offsets_;
};

// f(x) = -sum_i w_i log2(b_i + sum_j c_ij x_idx_ij); convex for w_i >= 0.
template <typename Scalar>
class NegLogAffineFunctional : public Functional<Scalar> {
 public:
  struct Term {
    Scalar weight;
    Scalar offset;  // b_i
    std::vector<int> indices;
    std::vector<Scalar> coeffs;
  };

  explicit NegLogAffineFunctional(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
      support_.insert(support_.end(), t.indices.begin(), t.indices.end());
    }
    std::sort(support_.begin(), support_.end());
    support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  }

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = Scalar(0);
    for (const auto& t : terms_) {
      const Scalar arg = argument(t, x);
      if (!(arg > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
      v -= t.weight * std::log2(arg);
    }
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    for (const auto& t : terms_) {
      const Scalar f = -w * t.weight * log2e<Scalar>() / argument(t, x);
      for (size_t j = 0; j < t.indices.size(); ++j) grad(t.indices[j]) += f * t.coeffs[j];
    }
  }
  void add_hessian(const Vector<Scalar>& x, Scalar w, Matrix<Scalar>& hess) const override {
    for (const auto& t : terms_) {
      const Scalar arg = argument(t, x);
      const Scalar f = w * t.weight * log2e<Scalar>() / (arg * arg);
      for (size_t a = 0; a < t.indices.size(); ++a) {
        for (size_t b = 0; b < t.indices.size(); ++b) {
          hess(t.indices[a], t.indices[b]) += f * t.coeffs[a] * t.coeffs[b];
        }
      }
    }
  }
  const std::vector<int>& support() const override { return support_; }

 private:
  static Scalar argument(const Term& t, const Vector<Scalar>& x) {
    Scalar arg = t.offset;
    for (size_t j = 0; j < t.indices.size(); ++j) arg += t.coeffs[j] * x(t.indices[j]);
    return arg;
  }

  std::vector<Term> terms_;
  std::vector<int> support_;
};

// f(x) = weight * log2(sum_j c_j / (d_j + x_idx_j) + e); convex on
// x_idx_j > -d_j for c_j >= 0, e > 0.
template <typename Scalar>
class LogRecipSumFunctional : public Functional<Scalar> {
 public:
  LogRecipSumFunctional(Scalar weight, std::vector<int> indices, std::vector<Scalar> numerators,
                        std::vector<Scalar> denom_offsets, Scalar constant)
      : weight_(weight),
        indices_(std::move(indices)),
        numerators_(std::move(numerators)),
        denom_offsets_(std::move(denom_offsets)),
        constant_(constant) {}

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar total = constant_;
    for (size_t j = 0; j < indices_.size(); ++j) {
      const Scalar den = denom_offsets_[j] + x(indices_[j]);
      if (!(den > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
      total += numerators_[j] / den;
    }
    return weight_ * std::log2(total);
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    const Scalar total = total_at(x);
    const Scalar f = w * weight_ * log2e<Scalar>() / total;
    for (size_t j = 0; j < indices_.size(); ++j) {
      const Scalar den = denom_offsets_[j] + x(indices_[j]);
      grad(indices_[j]) -= f * numerators_[j] / (den * den);
    }
  }
  void add_hessian(const Vector<Scalar>& x, Scalar w, Matrix<Scalar>& hess) const override {
    const Scalar total = total_at(x);
    const Scalar f = w * weight_ * log2e<Scalar>();
    // d/dS_j of c/(d+S): slope_j = -c_j/(d_j+S_j)^2; curvature_j = 2 c_j/(d_j+S_j)^3.
    for (size_t a = 0; a < indices_.size(); ++a) {
      const Scalar dena = denom_offsets_[a] + x(indices_[a]);
      const Scalar slope_a = -numerators_[a] / (dena * dena);
      hess(indices_[a], indices_[a]) += f * Scalar(2) * numerators_[a] / (dena * dena * dena) / total;
      for (size_t b = 0; b < indices_.size(); ++b) {
        const Scalar denb = denom_offsets_[b] + x(indices_[b]);
        const Scalar slope_b = -numerators_[b] / (denb * denb);
        hess(indices_[a], indices_[b]) -= f * slope_a * slope_b / (total * total);
      }
    }
  }
  const std::vector<int>& support() const override { return indices_; }

 private:
  Scalar total_at(const Vector<Scalar>& x) const {
    Scalar total = constant_;
    for (size_t j = 0; j < indices_.size(); ++j) {
      total += numerators_[j] / (denom_offsets_[j] + x(indices_[j]));
    }
    return total;
  }

  Scalar weight_;
  std::vector<int> indices_;
  std::vector<Scalar> numerators_;
  std::vector<Scalar> denom_offsets_;
  Scalar constant_;
};

// Sum of sub-functionals; convex when every part is.
template <typename Scalar>
class SumFunctional : public Functional<Scalar> {
 public:
  explicit SumFunctional(std::vector<FunctionalPtr<Scalar>> parts) : parts_(std::move(parts)) {
    for (const auto& p : parts_) {
      support_.insert(support_.end(), p->support().begin(), p->support().end());
    }
    std::sort(support_.begin(), support_.end());
    support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  }

  Scalar value(const Vector<Scalar>& x) const override {
    Scalar v = Scalar(0);
    for (const auto& p : parts_) {
      v += p->value(x);
      if (!std::isfinite(static_cast<double>(v))) return v;
    }
    return v;
  }
  void add_gradient(const Vector<Scalar>& x, Scalar w, Vector<Scalar>& grad) const override {
    for (const auto& p : parts_) p->add_gradient(x, w, grad);
  }
  void add_hessian(const Vector<Scalar>& x, Scalar w, Matrix<Scalar>& hess) const override {
    for (const auto& p : parts_) p->add_hessian(x, w, hess);
  }
  const std::vector<int>& support() const override { return support_; }

 private:
  std::vector<FunctionalPtr<Scalar>> parts_;
  std::vector<int> support_;
};

// max objective(x) s.t. g_i(x) <= 0 for every constraint, from a strictly
// feasible start point.
template <typename Scalar>
struct SmoothConvexProgram {
  int num_vars = 0;
  FunctionalPtr<Scalar> objective;
  std::vector<FunctionalPtr<Scalar>> constraints;
  Vector<Scalar> start;
};

template <typename Scalar>
struct SmoothSettings {
  Scalar tol_feas = Scalar(1e-7);
  Scalar tol_kkt = Scalar(1e-6);
  Scalar barrier_t0 = Scalar(1);
  Scalar barrier_mu = Scalar(30);
  Scalar gap_tol = Scalar(1e-9);
  int max_outer = 40;
  int max_newton = 60;
  int max_line_search = 60;
  Scalar newton_tol = Scalar(1e-12);
};

// Max relative central-difference error over the support of `fn` at `x`.
template <typename Scalar>
Scalar gradient_check(const Functional<Scalar>& fn, const Vector<Scalar>& x,
                      Scalar step = Scalar(1e-6)) {
  Vector<Scalar> grad = Vector<Scalar>::Zero(x.size());
  fn.add_gradient(x, Scalar(1), grad);
  Scalar worst = Scalar(0);
  for (int idx : fn.support()) {
    Vector<Scalar> xp = x, xm = x;
    const Scalar h = step * (Scalar(1) + std::abs(x(idx)));
    xp(idx) += h;
    xm(idx) -= h;
    const Scalar fd = (fn.value(xp) - fn.value(xm)) / (Scalar(2) * h);
    const Scalar scale = std::max({Scalar(1), std::abs(fd), std::abs(grad(idx))});
    worst = std::max(worst, std::abs(fd - grad(idx)) / scale);
  }
  return worst;
}

namespace detail {

template <typename Scalar>
bool strictly_feasible(const SmoothConvexProgram<Scalar>& prog, const Vector<Scalar>& x,
                       Scalar margin = Scalar(0)) {
  for (const auto& g : prog.constraints) {
    const Scalar v = g->value(x);
    if (!std::isfinite(static_cast<double>(v)) || v >= -margin) return false;
  }
  return true;
}

}  // namespace detail

template <typename Scalar>
SolveOutcome<Scalar> solve_smooth(const SmoothConvexProgram<Scalar>& prog,
                                  const SmoothSettings<Scalar>& settings = {}) {
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;
  const int n = prog.num_vars;
  const int m = static_cast<int>(prog.constraints.size());
  if (!prog.objective || prog.start.size() != n) {
    throw std::invalid_argument("solve_smooth: malformed program");
  }
  if (!detail::strictly_feasible(prog, prog.start)) {
    throw std::domain_error("solve_smooth: start point is not strictly feasible");
  }

#ifndef NDEBUG
  // Cheap guard against mis-specified calculus in debug builds.
  for (const auto& g : prog.constraints) {
    if (gradient_check(*g, prog.start) > Scalar(1e-3)) {
      throw std::logic_error("solve_smooth: constraint gradient fails finite-difference check");
    }
  }
#endif

  Vec x = prog.start;
  const Scalar f_start = prog.objective->value(x);

  // phi_t(x) = -t f0(x) - sum log(-g_i(x)), minimized by Newton steps.
  auto barrier_value = [&](const Vec& pt, Scalar t) -> Scalar {
    Scalar v = -t * prog.objective->value(pt);
    for (const auto& g : prog.constraints) {
      const Scalar gi = g->value(pt);
      if (!std::isfinite(static_cast<double>(gi)) || gi >= Scalar(0)) {
        return std::numeric_limits<Scalar>::infinity();
      }
      v -= std::log(-gi);
    }
    return v;
  };

  SolveOutcome<Scalar> out;
  out.solution = x;
  Vec grad(n);
  Mat hess(n, n);
  Vec scratch(n);
  int newton_steps = 0;
  bool stalled = false;
  bool centered = true;

  Scalar t = settings.barrier_t0;
  for (int outer = 0; outer < settings.max_outer; ++outer) {
    centered = false;
    for (int it = 0; it < settings.max_newton; ++it) {
      // Assemble gradient and Hessian of phi_t.
      grad.setZero();
      hess.setZero();
      prog.objective->add_gradient(x, -t, grad);
      prog.objective->add_hessian(x, -t, hess);
      bool domain_ok = true;
      for (const auto& g : prog.constraints) {
        const Scalar gi = g->value(x);
        if (!(gi < Scalar(0))) {
          domain_ok = false;
          break;
        }
        const Scalar inv = Scalar(1) / (-gi);
        for (int idx : g->support()) scratch(idx) = Scalar(0);
        g->add_gradient(x, Scalar(1), scratch);
        for (int a : g->support()) grad(a) += inv * scratch(a);
        const auto& sup = g->support();
        for (size_t ia = 0; ia < sup.size(); ++ia) {
          const Scalar ga = scratch(sup[ia]);
          for (size_t ib = 0; ib < sup.size(); ++ib) {
            hess(sup[ia], sup[ib]) += inv * inv * ga * scratch(sup[ib]);
          }
        }
        g->add_hessian(x, inv, hess);
      }
      if (!domain_ok) break;  // cannot happen from a feasible iterate; bail out

      // Newton direction with escalating regularization, gradient fallback.
      Vec dir;
      bool have_descent = false;
      Scalar reg = Scalar(0);
      const Scalar diag_scale = Scalar(1) + hess.diagonal().cwiseAbs().maxCoeff();
      for (int attempt = 0; attempt < 4 && !have_descent; ++attempt) {
        Mat h = hess;
        if (reg > Scalar(0)) h.diagonal().array() += reg;
        Eigen::LDLT<Mat> ldlt(h);
        if (ldlt.info() == Eigen::Success) {
          dir = ldlt.solve(-grad);
          if (dir.allFinite() && grad.dot(dir) < Scalar(0)) have_descent = true;
        }
        reg = reg == Scalar(0) ? Scalar(1e-10) * diag_scale : reg * Scalar(100);
      }
      if (!have_descent) dir = -grad;  // gradient fallback on ill-conditioning

      const Scalar decrement = -grad.dot(dir);
      const Scalar phi0 = barrier_value(x, t);
      if (decrement / 2 <= settings.newton_tol * (Scalar(1) + std::abs(phi0))) {
        centered = true;
        break;
      }

      // Backtracking line search keeping strict feasibility.
      Scalar step = Scalar(1);
      bool accepted = false;
      for (int ls = 0; ls < settings.max_line_search; ++ls) {
        Vec cand = x + step * dir;
        const Scalar phi = barrier_value(cand, t);
        if (std::isfinite(static_cast<double>(phi)) &&
            phi <= phi0 - Scalar(0.25) * step * decrement) {
          x = std::move(cand);
          accepted = true;
          break;
        }
        step *= Scalar(0.5);
      }
      ++newton_steps;
      if (!accepted) {
        stalled = true;
        break;
      }
    }
    if (Scalar(m) / t <= settings.gap_tol * (Scalar(1) + std::abs(prog.objective->value(x)))) {
      break;
    }
    t *= settings.barrier_mu;
  }

  // Monotonicity guarantee: never return a point worse than the start.
  Scalar f_final = prog.objective->value(x);
  if (!(f_final >= f_start)) {
    x = prog.start;
    f_final = f_start;
    stalled = true;
  }

  // First-order optimality certificate for a centered barrier point: the
  // multipliers lambda_i = 1/(t(-g_i)) are dual feasible with complementarity
  // gap m/t, so a converged final centering step bounds the suboptimality.
  Scalar worst_constraint = Scalar(0);
  for (const auto& g : prog.constraints) {
    worst_constraint = std::max(worst_constraint, g->value(x));
  }
  const Scalar gap_rel =
      m > 0 ? Scalar(m) / t / (Scalar(1) + std::abs(f_final)) : Scalar(0);

  out.solution = x;
  out.objective = f_final;
  out.iterations = newton_steps;
  out.kkt_residual = std::max(gap_rel, worst_constraint);
  const bool kkt_ok = centered && gap_rel <= settings.tol_kkt &&
                      worst_constraint <= settings.tol_feas;
  out.status = kkt_ok ? SolveStatus::optimal : SolveStatus::max_iters;
  if (!kkt_ok && stalled) out.diagnostic = "line search stagnated; best feasible iterate returned";
  return out;
}

}  // namespace uavnet::convex
