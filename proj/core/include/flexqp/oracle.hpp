#pragma once

#include "flexqp/qp.hpp"

namespace flexqp {

struct OracleOptions {
  int max_n = 30;
  int max_m = 30;
  double tol = 1e-9;
};

/// Brute-force active-set enumeration for desk-scale problems. Subsets of
/// the inequalities are tried in order of increasing size; the first one
/// whose equality-constrained KKT solution satisfies every optimality
/// condition within `tol` is returned with status Solved.
///
/// When no subset qualifies, a phase-1 elastic problem (zero objective,
/// unit penalties) measures the minimum total violation. A positive
/// violation yields SolvedInfeasibleOriginal with z holding the violations;
/// a feasible problem without a KKT point is reported as Unbounded.
///
/// Throws ArgumentError when n or m exceeds the configured limits.
QpSolution oracle_solve(const QpProblem& prob, const OracleOptions& opts = {});

}  // namespace flexqp
