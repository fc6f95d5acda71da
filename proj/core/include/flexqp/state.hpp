#pragma once

#include "flexqp/qp.hpp"

namespace flexqp {

inline constexpr double kParamMin = 1e-6;
inline constexpr double kParamMax = 1e6;

/// Dimension-free parameter values, broadcast over every constraint.
struct ScalarParams {
  double mu_I = 1e3;
  double mu_E = 1e3;
  double sigma_x = 1e-6;
  double sigma_s = 1e-1;
  double rho_I = 1e-1;
  double rho_E = 1e-1;
  double alpha = 1.6;
};

/// Elastic penalties (mu), augmented-Lagrangian penalties (sigma, rho) and
/// the relaxation factor. Per-constraint vectors throughout.
struct SolverParams {
  Vec mu_I;      // m
  Vec mu_E;      // p
  double sigma_x = 1e-6;
  Vec sigma_s;   // m
  Vec rho_I;     // m
  Vec rho_E;     // p
  double alpha = 1.6;

  static SolverParams broadcast(int m, int p, const ScalarParams& s);
  static SolverParams defaults(int m, int p) { return broadcast(m, p, ScalarParams{}); }

  /// Throws ParameterError unless every penalty is positive and finite and
  /// alpha lies in (0, 2); throws ArgumentError on a size mismatch.
  void validate(int m, int p) const;

  /// Copy with every penalty clamped to [kParamMin, kParamMax]; alpha untouched.
  SolverParams clamped() const;
};

/// Every ADMM iterate. The "_prev" vectors hold the previous second-block
/// iterate so that ADMM dual residuals can be formed from the state alone.
struct SolverState {
  Vec x, x_tilde;                                   // n
  Vec s, s_tilde, z_I, z_I_tilde, w_s, y_I, nu_I;   // m
  Vec z_E, z_E_tilde, y_E, nu_E;                    // p
  Vec x_prev, s_prev, z_I_prev, z_E_prev;
  int k = 0;

  /// All primal and dual variables zero except s = (h - G x)_+ = h_+.
  static SolverState cold_start(const QpProblem& prob);

  void check_dims(const QpProblem& prob) const;
};

}  // namespace flexqp
