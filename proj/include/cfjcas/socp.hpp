// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfjcas/types.hpp"

namespace cfjcas::socp {

/// One second-order cone constraint ||A q + b|| <= f.q + g. A may have zero
/// rows, which degenerates to the linear constraint f.q + g >= 0.
struct Cone {
  RMatrix a;
  RVector b;
  RVector f;
  double g = 0.0;
};

struct Program {
  int n_vars = 0;
  RVector objective;        // minimize objective . q
  std::vector<Cone> cones;
  bool nonneg = true;       // q >= 0
};

enum class Status { optimal, infeasible, max_iter };

struct Solution {
  RVector q;
  double objective_value = 0.0;
  Status status = Status::max_iter;
  /// Relative duality-gap bound of the final central point (nu / t, scaled by
  /// 1 + |objective|); <= tol when status == optimal.
  double kkt_residual = std::numeric_limits<double>::infinity();
  int barrier_stages = 0;
  int newton_steps = 0;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_barrier_stages = 200;
  int max_newton_per_stage = 50;
  double barrier_growth = 10.0;
};

struct FeasibilityReport {
  /// max over cones of ||A q + b|| - (f.q + g); negative inside.
  double worst_cone_violation = -std::numeric_limits<double>::infinity();
  int worst_cone = -1;
  /// min entry of q (meaningful when the program carries the nonneg bound).
  double min_variable = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

/// Primal barrier interior-point solve. Phase-1 (max-min-slack) finds a
/// strictly feasible start unless a valid hint is supplied; phase-2 follows
/// the central path with a fixed barrier growth factor.
Solution solve(const Program& program, const SolverOptions& options = {});
Solution solve(const Program& program, const RVector& hint,
               const SolverOptions& options = {});

/// Phase-1 only: a strictly feasible interior point, or nullopt when the
/// maximum slack certifies infeasibility (within options.tol).
std::optional<RVector> find_interior(const Program& program,
                                     const SolverOptions& options = {});

FeasibilityReport feasibility_check(const Program& program, const RVector& q,
                                    double tol);

/// One constraint per line, dense rows. Debug aid, not a stable format.
std::string dump(const Program& program);

}  // namespace cfjcas::socp
