#pragma once

#include "flexqp/solver.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace flexqp {

/// Smooth NLP
///   minimize f(x)  subject to  g(x) <= 0,  h(x) = 0
/// given by evaluators. Jacobians are m x n and p x n. The Hessian evaluator
/// returns the full symmetric n x n matrix of the Lagrangian (or a
/// surrogate) at (x, y_I, y_E).
struct NlpSpec {
  int n = 0, m = 0, p = 0;
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad_f;
  std::function<Vec(const Vec&)> g;
  std::function<SpMat(const Vec&)> jac_g;
  std::function<Vec(const Vec&)> h;
  std::function<SpMat(const Vec&)> jac_h;
  std::function<SpMat(const Vec& x, const Vec& y_I, const Vec& y_E)> hessian;
  Vec x0;  // initial guess
  std::string name;

  /// Throws ArgumentError on missing evaluators or a wrong-sized x0.
  void validate() const;
};

/// Wraps a convex QP as an NLP with its exact Hessian.
NlpSpec nlp_from_qp(const QpProblem& prob, const Vec& x0);

/// Function values and derivatives at one point. Throws SqpError naming the
/// evaluator that produced a non-finite value or a wrong size.
struct NlpEval {
  double f = 0.0;
  Vec grad_f, g, h;
  SpMat jac_g, jac_h;
};
NlpEval evaluate(const NlpSpec& nlp, const Vec& x);

/// Smallest tau >= 0 (0, then 1e-8 * max(1, |H|max) growing by 10x) for
/// which H + tau I has a nonnegative LDL' diagonal.
double psd_shift(const SpMat& H);

/// QP in the step dx: P = hessian + hess_reg I (+ PSD shift), q = grad f,
/// G = Jg, h = -g, A = Jh, b = -h.
QpProblem build_subproblem(const NlpSpec& nlp, const Vec& x, const Vec& y_I, const Vec& y_E,
                           double hess_reg = 0.0);
QpProblem build_subproblem(const NlpSpec& nlp, const NlpEval& ev, const Vec& x, const Vec& y_I,
                           const Vec& y_E, double hess_reg = 0.0);

/// Same structure as the QP residual map: stationarity and constraint
/// violation. Complementarity is reported but not part of the norm, since
/// the multipliers come from subproblems solved to the QP tolerance only.
struct NlpResidual {
  double stationarity = 0.0;     // |grad f + Jg'y_I + Jh'y_E|inf
  double primal = 0.0;           // max(|g_+|inf, |h|inf)
  double complementarity = 0.0;  // |min(y_I, -g)|inf, diagnostic
  double inf_norm() const;       // max(stationarity, primal)
};
NlpResidual nlp_residual(const NlpEval& ev, const Vec& y_I, const Vec& y_E);

/// f + mu (|h|_1 + |g_+|_1).
double l1_merit(const NlpEval& ev, double mu);

struct L1MeritConfig {
  bool line_search = true;  // false: always take the full step
  double armijo = 1e-4;
  int max_halvings = 30;
  /// On a failed search the subproblem is re-solved, warm-started, with its
  /// tolerance divided by refine_factor, at most this many times, before the
  /// zero step is taken. An inexact subproblem can return a direction that
  /// is not a descent direction of the merit.
  int refinements = 2;
  double refine_factor = 100.0;
};

struct SqpSettings {
  int max_iter = 50;
  double eps = 1e-2;
  double hess_reg = 0.0;
  L1MeritConfig merit{};
  /// Settings for every subproblem solve. Defaults: eps 1e-3, fixed
  /// rho = sigma_s = 10 and mu = 1e4, 10 s budget, 20000 iteration cap.
  SolveSettings qp = default_qp_settings();
  bool record_iterates = false;
  /// Start each subproblem from the final ADMM state of the previous one.
  bool warm_start = true;

  static SolveSettings default_qp_settings();
  void validate() const;
};

enum class SqpStatus { Converged, MaxIter, Stalled };
const char* to_string(SqpStatus status);

struct SqpIteration {
  int iter = 0;
  NlpResidual residual;  // at the iterate the step starts from
  double merit_mu = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double directional_derivative = 0.0;
  double step = 0.0;
  SolveStatus qp_status = SolveStatus::MaxIter;
  int qp_iterations = 0;  // summed over refinements
  int qp_refinements = 0;
};

struct SqpResult {
  Vec x, y_I, y_E;
  SqpStatus status = SqpStatus::MaxIter;
  int iterations = 0;  // number of subproblems solved
  NlpResidual residual;  // at the returned point
  std::vector<SqpIteration> history;
  std::vector<Vec> iterates;  // x_0, x_1, ... when record_iterates
};

SqpResult sqp_solve(const NlpSpec& nlp, const SqpSettings& settings = {});

}  // namespace flexqp
