#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <map>
#include <string>
#include <vector>

namespace flexqp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Builds a compressed column matrix with sorted row indices. Duplicate
/// triplets are summed; explicit zeros that result are kept.
SpMat make_csc(int rows, int cols, const std::vector<Triplet>& entries);

/// Upper triangle (including the diagonal) of a dense symmetric matrix.
SpMat upper_from_dense(const Mat& symmetric, double drop_tol = 0.0);

/// Dense -> sparse, dropping entries with |v| <= drop_tol.
SpMat sparse_from_dense(const Mat& dense, double drop_tol = 0.0);

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Convex QP
///   minimize   1/2 x'Px + q'x
///   subject to Gx <= h,  Ax = b.
///
/// P holds the upper triangle only. The object is immutable after
/// construction; construction rejects NaN/Inf, inconsistent dimensions and
/// entries below the diagonal of P.
class QpProblem {
 public:
  QpProblem() = default;
  QpProblem(SpMat P, Vec q, SpMat G, Vec h, SpMat A, Vec b, std::string name = {});

  int n() const { return static_cast<int>(q_.size()); }
  int m() const { return static_cast<int>(h_.size()); }
  int p() const { return static_cast<int>(b_.size()); }

  const SpMat& P() const { return P_; }
  const Vec& q() const { return q_; }
  const SpMat& G() const { return G_; }
  const Vec& h() const { return h_; }
  const SpMat& A() const { return A_; }
  const Vec& b() const { return b_; }
  const std::string& name() const { return name_; }

  /// P x using the mirrored upper triangle.
  Vec P_times(const Vec& x) const;
  /// Full symmetric P as a dense matrix (testing and desk-scale oracles).
  Mat P_dense() const;

 private:
  SpMat P_, G_, A_;
  Vec q_, h_, b_;
  std::string name_;
};

enum class SolveStatus { Solved, SolvedInfeasibleOriginal, MaxIter, Timeout, Unbounded };

const char* to_string(SolveStatus status);

struct QpSolution {
  Vec x, y_I, y_E;
  /// Converged constraint violations. Nonzero entries certify which
  /// constraints of the original problem could not be satisfied.
  Vec z_I, z_E;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  std::map<std::string, long long> stats;
};

/// Residuals of the elastic problem, ADMM splitting residuals and the
/// residual norm of the original QP at one iterate.
struct ResidualBundle {
  Vec zeta_dual;  // P x + q + G'y_I + A'y_E
  Vec zeta_I;     // G x + s - h - z_I
  Vec zeta_E;     // A x - b - z_E

  struct Blocks {
    Vec x, s, I, E;
  };
  Blocks admm_primal;  // tilde - current
  Blocks admm_dual;    // previous - current; zero at k = 0

  double qp_residual_inf = 0.0;

  double relaxed_inf() const;      // max over zeta_dual, zeta_I, zeta_E
  double admm_primal_inf() const;  // max over the four primal blocks
  double admm_dual_inf() const;    // max over the four dual blocks
  /// The nine norms fed to the relaxation policy, in its input order.
  std::vector<double> policy_norms() const;
};

// Forward declaration; defined in solver.hpp.
struct SolverState;

void check_dim(const Vec& v, int expected, const char* what);

/// 1/2 x'Px + q'x.
double objective(const QpProblem& prob, const Vec& x);

/// objective(x) + mu_I'(Gx - h)_+ + mu_E'|Ax - b|. A penalty vector of
/// size one is broadcast over its block.
double elastic_objective(const QpProblem& prob, const Vec& x, const Vec& mu_I, const Vec& mu_E);
double elastic_objective(const QpProblem& prob, const Vec& x, double mu_I, double mu_E);

struct QpResidual {
  Vec stacked;  // (stationarity, max(Gx - h, 0), Ax - b)
  double inf_norm = 0.0;
};

/// Residual map of the original QP at (x, y_I, y_E).
QpResidual qp_residual(const QpProblem& prob, const Vec& x, const Vec& y_I, const Vec& y_E);

/// Relaxed-problem and ADMM residuals at the given solver state.
ResidualBundle relaxed_residuals(const QpProblem& prob, const SolverState& state);

}  // namespace flexqp
