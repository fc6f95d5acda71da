#pragma once

#include "flexqp/state.hpp"

#include <memory>

namespace flexqp {

/// Values that enter the block-1 coefficient matrix. A factorization is
/// valid exactly as long as these are unchanged.
struct KktParams {
  double sigma_x = 1e-6;
  Vec sigma_s, rho_I, rho_E;

  static KktParams from(const SolverParams& params);
};

/// Upper triangle of the quasi-definite (n+m+p) system
///   [ P + sigma_x I   G'                         A'           ]
///   [ G               -(1/sigma_s + 1/rho_I)     0            ]
///   [ A               0                          -(1/rho_E)   ]
/// Diagonal entries are always present in the pattern.
SpMat assemble_kkt(const QpProblem& prob, const SolverParams& params);

/// Right-hand side of the reduced block-1 system at the given state.
Vec kkt_rhs(const QpProblem& prob, const SolverParams& params, const SolverState& state);

/// LDL' factorization of a quasi-definite matrix with a fill-reducing
/// (approximate minimum degree) ordering. The symbolic analysis is reused
/// by refactor() as long as the sparsity pattern is unchanged.
class KktFactorization {
 public:
  KktFactorization();
  ~KktFactorization();
  KktFactorization(KktFactorization&&) noexcept;
  KktFactorization& operator=(KktFactorization&&) noexcept;

  /// Symbolic + numeric factorization of an upper-triangle matrix.
  /// Throws FactorizationError naming the first zero pivot.
  static KktFactorization factor(const SpMat& kkt_upper);

  /// Numeric refactorization with identical sparsity pattern.
  void refactor(const SpMat& kkt_upper);

  Vec solve(const Vec& rhs) const;

  int dim() const;
  /// Fill-reducing permutation as an index sequence (P * K * P').
  Eigen::VectorXi permutation() const;
  SpMat L() const;  // unit lower triangular
  Vec D() const;

  /// Matrix this factorization was built from (upper triangle).
  const SpMat& matrix() const;

  KktParams params_snapshot;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Block1Solution {
  Vec x_tilde, nu_I, nu_E;
};

/// Solves the assembled system for (x~, nu_I~, nu_E~) and applies one step
/// of iterative refinement against fact.matrix().
Block1Solution solve_direct(const KktFactorization& fact, const Vec& rhs, int n, int m, int p);

struct Block1Recovery {
  Vec s_tilde, z_I_tilde, z_E_tilde;
};

/// Eliminated block-1 variables from the multipliers of the reduced system.
Block1Recovery recover_block1(const SolverState& state, const SolverParams& params, const Vec& nu_I,
                              const Vec& nu_E);

enum class Preconditioner { None, Jacobi };

struct CgConfig {
  double tol = 1e-5;  // relative: ||r||_2 <= tol * ||rhs||_2
  int max_iter = 0;   // 0 means 10 * n
  Preconditioner preconditioner = Preconditioner::None;

  void validate() const;
};

struct IndirectSolution {
  Vec x_tilde, nu_I, nu_E;
  int cg_iters = 0;
  bool converged = false;
};

/// Conjugate gradients on the positive definite n x n reduced system,
/// warm-started from state.x_tilde, followed by multiplier recovery.
IndirectSolution solve_indirect(const QpProblem& prob, const SolverParams& params,
                                const SolverState& state, const CgConfig& cfg);

/// True iff some matrix-entering parameter changed by more than `band`
/// (ratio outside [1/band, band]).
bool should_refactor(const KktParams& old_params, const KktParams& new_params, double band = 5.0);
bool should_refactor(const SolverParams& old_params, const SolverParams& new_params, double band = 5.0);

enum class LinearMethod { Direct, Indirect };

/// Block-1 solve with caching, used once per ADMM iteration. For the direct
/// method the factorization is kept while proposed parameters stay within
/// the refactorization band; the solver then runs with the factored values.
class Block1Solver {
 public:
  Block1Solver(const QpProblem& prob, LinearMethod method, CgConfig cg = {}, double refactor_band = 5.0);

  /// Parameters to run the next iteration with: `proposed` with its
  /// matrix-entering entries replaced by the factored ones unless a
  /// refactorization is triggered (which happens here).
  SolverParams accept(const SolverParams& proposed);

  struct Result {
    Vec x_tilde, nu_I, nu_E;
  };
  Result solve(const SolverState& state, const SolverParams& params);

  LinearMethod method() const { return method_; }
  long long factorizations() const { return factorizations_; }
  long long cg_iterations() const { return cg_iterations_; }
  long long cg_failures() const { return cg_failures_; }

 private:
  const QpProblem* prob_;
  LinearMethod method_;
  CgConfig cg_;
  double band_;
  std::unique_ptr<KktFactorization> fact_;
  long long factorizations_ = 0;
  long long cg_iterations_ = 0;
  long long cg_failures_ = 0;

  void refactor(const SolverParams& params);
};

}  // namespace flexqp
