#pragma once

#include "flexqp/linsys.hpp"
#include "flexqp/policy.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace flexqp {

struct SolveSettings {
  double eps_abs = 1e-3;
  int max_iter = 4000;
  std::optional<std::chrono::duration<double>> time_limit;
  LinearMethod method = LinearMethod::Direct;
  /// Used for LinearMethod::Indirect. A tol of 0 means 1e-2 * eps_abs.
  CgConfig cg{0.0, 0, Preconditioner::None};
  /// nullptr selects ParamPolicy::fixed(ScalarParams{}).
  std::shared_ptr<const ParamPolicy> policy;
  int check_every = 1;
  bool record_trace = false;
  double divergence_threshold = 1e12;
  double refactor_band = 5.0;
  /// Called after every ADMM step with the new state and the parameters the
  /// step ran with.
  std::function<void(const SolverState&, const SolverParams&)> on_iterate;

  void validate() const;
};

struct SolveResult {
  QpSolution solution;
  SolverState state;
  SolverParams final_params;
  std::vector<ResidualBundle> trace;  // one entry per evaluated iterate when record_trace
};

/// Elementwise S_kappa(v) = (v - kappa)_+ - (-v - kappa)_+.
Vec soft_threshold(const Vec& v, const Vec& kappa);
Vec soft_threshold(const Vec& v, double kappa);

/// One pass of the ADMM loop: block-1 solve, recovery of the eliminated
/// variables, relaxed second-block updates (ReLU on s, soft thresholding on
/// z) and the dual updates. Increments k.
SolverState admm_step(const QpProblem& prob, const SolverState& state, const SolverParams& params,
                      Block1Solver& linear);

/// Convenience overload that builds a one-shot linear solver.
SolverState admm_step(const QpProblem& prob, const SolverState& state, const SolverParams& params,
                      const SolveSettings& settings);

/// Runs ADMM until the relaxed and ADMM residuals are all below eps_abs,
/// then classifies the result from the violation vectors z.
SolveResult solve(const QpProblem& prob, const SolveSettings& settings = {},
                  const SolverState* warm_start = nullptr);

struct FeasibilityReport {
  bool feasible = true;
  std::vector<int> violated_inequalities;
  std::vector<int> violated_equalities;
};

/// Indices whose violation |z| exceeds eps.
FeasibilityReport classify_feasibility(const QpSolution& solution, double eps);

}  // namespace flexqp
