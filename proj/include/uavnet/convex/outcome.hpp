// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "uavnet/types.hpp"

namespace uavnet::convex {

enum class SolveStatus { optimal, max_iters, infeasible, numeric_failure };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

// Shared result record for the LP and smooth solvers. `duals` is filled by
// the LP path only.
template <typename Scalar>
struct SolveOutcome {
  SolveStatus status = SolveStatus::numeric_failure;
  Vector<Scalar> solution;
  Scalar objective = Scalar(0);
  int iterations = 0;
  Scalar kkt_residual = Scalar(0);
  Vector<Scalar> duals;
  std::string diagnostic;

  bool ok() const { return status == SolveStatus::optimal; }
};

}  // namespace uavnet::convex
