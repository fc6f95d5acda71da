#include "flexqp/qp.hpp"

#include "flexqp/error.hpp"
#include "flexqp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flexqp {

SpMat make_csc(int rows, int cols, const std::vector<Triplet>& entries) {
  SpMat out(rows, cols);
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

SpMat sparse_from_dense(const Mat& dense, double drop_tol) {
  std::vector<Triplet> t;
  for (int j = 0; j < dense.cols(); ++j)
    for (int i = 0; i < dense.rows(); ++i)
      if (std::abs(dense(i, j)) > drop_tol) t.emplace_back(i, j, dense(i, j));
  return make_csc(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()), t);
}

SpMat upper_from_dense(const Mat& symmetric, double drop_tol) {
  std::vector<Triplet> t;
  for (int j = 0; j < symmetric.cols(); ++j)
    for (int i = 0; i <= j; ++i)
      if (std::abs(symmetric(i, j)) > drop_tol || i == j) t.emplace_back(i, j, symmetric(i, j));
  return make_csc(static_cast<int>(symmetric.rows()), static_cast<int>(symmetric.cols()), t);
}

namespace {

void require_finite(const SpMat& M, const char* what) {
  for (int k = 0; k < M.nonZeros(); ++k)
    if (!std::isfinite(M.valuePtr()[k]))
      throw ArgumentError(std::string("non-finite entry in ") + what);
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw ArgumentError(std::string("non-finite entry in ") + what);
}

void require_shape(const SpMat& M, int rows, int cols, const char* what) {
  if (M.rows() != rows || M.cols() != cols)
    throw ArgumentError(std::string(what) + " has shape " + std::to_string(M.rows()) + "x" +
                        std::to_string(M.cols()) + ", expected " + std::to_string(rows) + "x" +
                        std::to_string(cols));
}

}  // namespace

QpProblem::QpProblem(SpMat P, Vec q, SpMat G, Vec h, SpMat A, Vec b, std::string name)
    : P_(std::move(P)),
      G_(std::move(G)),
      A_(std::move(A)),
      q_(std::move(q)),
      h_(std::move(h)),
      b_(std::move(b)),
      name_(std::move(name)) {
  const int nn = n();
  if (nn <= 0) throw ArgumentError("QpProblem needs at least one variable");
  // Zero-row blocks may come in as 0x0 default matrices.
  if (m() == 0 && G_.rows() == 0) G_.resize(0, nn);
  if (p() == 0 && A_.rows() == 0) A_.resize(0, nn);
  require_shape(P_, nn, nn, "P");
  require_shape(G_, m(), nn, "G");
  require_shape(A_, p(), nn, "A");
  P_.makeCompressed();
  G_.makeCompressed();
  A_.makeCompressed();
  for (int j = 0; j < nn; ++j)
    for (SpMat::InnerIterator it(P_, j); it; ++it)
      if (it.row() > j)
        throw ArgumentError("P must store the upper triangle only (entry at " +
                            std::to_string(it.row()) + "," + std::to_string(j) + ")");
  require_finite(P_, "P");
  require_finite(G_, "G");
  require_finite(A_, "A");
  require_finite(q_, "q");
  require_finite(h_, "h");
  require_finite(b_, "b");
}

Vec QpProblem::P_times(const Vec& x) const { return P_.selfadjointView<Eigen::Upper>() * x; }

Mat QpProblem::P_dense() const {
  Mat upper = Mat(P_);
  Mat full = upper + upper.transpose();
  full.diagonal() = upper.diagonal();
  return full;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Solved: return "Solved";
    case SolveStatus::SolvedInfeasibleOriginal: return "SolvedInfeasibleOriginal";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Timeout: return "Timeout";
    case SolveStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

double ResidualBundle::relaxed_inf() const {
  return std::max({inf_norm(zeta_dual), inf_norm(zeta_I), inf_norm(zeta_E)});
}

double ResidualBundle::admm_primal_inf() const {
  return std::max({inf_norm(admm_primal.x), inf_norm(admm_primal.s), inf_norm(admm_primal.I),
                   inf_norm(admm_primal.E)});
}

double ResidualBundle::admm_dual_inf() const {
  return std::max({inf_norm(admm_dual.x), inf_norm(admm_dual.s), inf_norm(admm_dual.I),
                   inf_norm(admm_dual.E)});
}

std::vector<double> ResidualBundle::policy_norms() const {
  return {inf_norm(zeta_dual),     inf_norm(zeta_I),        inf_norm(zeta_E),
          inf_norm(admm_dual.s),   inf_norm(admm_dual.I),   inf_norm(admm_dual.E),
          inf_norm(admm_primal.s), inf_norm(admm_primal.I), inf_norm(admm_primal.E)};
}

void check_dim(const Vec& v, int expected, const char* what) {
  if (v.size() != expected)
    throw ArgumentError(std::string(what) + " has size " + std::to_string(v.size()) +
                        ", expected " + std::to_string(expected));
}

double objective(const QpProblem& prob, const Vec& x) {
  check_dim(x, prob.n(), "x");
  return 0.5 * x.dot(prob.P_times(x)) + prob.q().dot(x);
}

namespace {

Vec broadcast_penalty(const Vec& mu, int size, const char* what) {
  Vec out;
  if (mu.size() == 1 && size != 1)
    out = Vec::Constant(size, mu[0]);
  else if (mu.size() == size)
    out = mu;
  else if (size == 0 && mu.size() <= 1)
    out = Vec(0);
  else
    throw ArgumentError(std::string(what) + " must be a scalar or have one entry per constraint");
  for (int i = 0; i < out.size(); ++i)
    if (!(out[i] > 0.0)) throw ParameterError(std::string(what) + " must be positive");
  return out;
}

}  // namespace

double elastic_objective(const QpProblem& prob, const Vec& x, const Vec& mu_I, const Vec& mu_E) {
  check_dim(x, prob.n(), "x");
  const Vec muI = broadcast_penalty(mu_I, prob.m(), "mu_I");
  const Vec muE = broadcast_penalty(mu_E, prob.p(), "mu_E");
  double value = objective(prob, x);
  if (prob.m() > 0) value += muI.dot((prob.G() * x - prob.h()).cwiseMax(0.0));
  if (prob.p() > 0) value += muE.dot((prob.A() * x - prob.b()).cwiseAbs());
  return value;
}

double elastic_objective(const QpProblem& prob, const Vec& x, double mu_I, double mu_E) {
  return elastic_objective(prob, x, Vec::Constant(1, mu_I), Vec::Constant(1, mu_E));
}

QpResidual qp_residual(const QpProblem& prob, const Vec& x, const Vec& y_I, const Vec& y_E) {
  check_dim(x, prob.n(), "x");
  check_dim(y_I, prob.m(), "y_I");
  check_dim(y_E, prob.p(), "y_E");
  const int n = prob.n(), m = prob.m(), p = prob.p();
  QpResidual r;
  r.stacked.resize(n + m + p);
  Vec stat = prob.P_times(x) + prob.q();
  if (m > 0) stat += prob.G().transpose() * y_I;
  if (p > 0) stat += prob.A().transpose() * y_E;
  r.stacked.head(n) = stat;
  if (m > 0) r.stacked.segment(n, m) = (prob.G() * x - prob.h()).cwiseMax(0.0);
  if (p > 0) r.stacked.tail(p) = prob.A() * x - prob.b();
  r.inf_norm = inf_norm(r.stacked);
  return r;
}

ResidualBundle relaxed_residuals(const QpProblem& prob, const SolverState& st) {
  st.check_dims(prob);
  const int m = prob.m(), p = prob.p();
  ResidualBundle r;
  r.zeta_dual = prob.P_times(st.x) + prob.q();
  if (m > 0) r.zeta_dual += prob.G().transpose() * st.y_I;
  if (p > 0) r.zeta_dual += prob.A().transpose() * st.y_E;
  r.zeta_I = m > 0 ? Vec(prob.G() * st.x + st.s - prob.h() - st.z_I) : Vec(0);
  r.zeta_E = p > 0 ? Vec(prob.A() * st.x - prob.b() - st.z_E) : Vec(0);

  r.admm_primal = {st.x_tilde - st.x, st.s_tilde - st.s, st.z_I_tilde - st.z_I,
                   st.z_E_tilde - st.z_E};
  if (st.k == 0) {
    r.admm_dual = {Vec::Zero(prob.n()), Vec::Zero(m), Vec::Zero(m), Vec::Zero(p)};
  } else {
    r.admm_dual = {st.x_prev - st.x, st.s_prev - st.s, st.z_I_prev - st.z_I,
                   st.z_E_prev - st.z_E};
  }
  r.qp_residual_inf = qp_residual(prob, st.x, st.y_I, st.y_E).inf_norm;
  return r;
}

}  // namespace flexqp
