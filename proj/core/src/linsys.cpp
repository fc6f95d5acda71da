#include "flexqp/linsys.hpp"

#include "flexqp/error.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace flexqp {

KktParams KktParams::from(const SolverParams& params) {
  return {params.sigma_x, params.sigma_s, params.rho_I, params.rho_E};
}

SpMat assemble_kkt(const QpProblem& prob, const SolverParams& params) {
  const int n = prob.n(), m = prob.m(), p = prob.p();
  params.validate(m, p);
  std::vector<Triplet> t;
  t.reserve(prob.P().nonZeros() + prob.G().nonZeros() + prob.A().nonZeros() + n + m + p);
  for (int j = 0; j < n; ++j) {
    for (SpMat::InnerIterator it(prob.P(), j); it; ++it) t.emplace_back(it.row(), j, it.value());
    t.emplace_back(j, j, params.sigma_x);
  }
  // G' and A' occupy the upper off-diagonal blocks.
  for (int j = 0; j < n; ++j) {
    for (SpMat::InnerIterator it(prob.G(), j); it; ++it) t.emplace_back(j, n + it.row(), it.value());
    for (SpMat::InnerIterator it(prob.A(), j); it; ++it)
      t.emplace_back(j, n + m + it.row(), it.value());
  }
  for (int i = 0; i < m; ++i)
    t.emplace_back(n + i, n + i, -(1.0 / params.sigma_s[i] + 1.0 / params.rho_I[i]));
  for (int i = 0; i < p; ++i) t.emplace_back(n + m + i, n + m + i, -1.0 / params.rho_E[i]);
  return make_csc(n + m + p, n + m + p, t);
}

namespace {

struct BlockRhs {
  Vec r_x, r_I, r_E;
};

BlockRhs block_rhs(const QpProblem& prob, const SolverParams& params, const SolverState& st) {
  BlockRhs r;
  r.r_x = params.sigma_x * st.x - prob.q();
  r.r_I = prob.h() - st.s + st.w_s.cwiseQuotient(params.sigma_s) + st.z_I -
          st.y_I.cwiseQuotient(params.rho_I);
  r.r_E = prob.b() + st.z_E - st.y_E.cwiseQuotient(params.rho_E);
  return r;
}

}  // namespace

Vec kkt_rhs(const QpProblem& prob, const SolverParams& params, const SolverState& state) {
  const int n = prob.n(), m = prob.m(), p = prob.p();
  const BlockRhs r = block_rhs(prob, params, state);
  Vec rhs(n + m + p);
  rhs << r.r_x, r.r_I, r.r_E;
  return rhs;
}

// ---------------------------------------------------------------------------

using Ldlt = Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::AMDOrdering<int>>;

struct KktFactorization::Impl {
  Ldlt ldlt;
  SpMat matrix;

  void numeric(const SpMat& upper) {
    matrix = upper;
    ldlt.factorize(matrix);
    if (ldlt.info() != Eigen::Success) {
      const Vec d = ldlt.vectorD();
      int pivot = 0;
      while (pivot < d.size() && d[pivot] != 0.0) ++pivot;
      throw FactorizationError("LDL' factorization hit a zero pivot at permuted index " +
                               std::to_string(pivot));
    }
  }
};

KktFactorization::KktFactorization() : impl_(std::make_unique<Impl>()) {}
KktFactorization::~KktFactorization() = default;
KktFactorization::KktFactorization(KktFactorization&&) noexcept = default;
KktFactorization& KktFactorization::operator=(KktFactorization&&) noexcept = default;

KktFactorization KktFactorization::factor(const SpMat& kkt_upper) {
  if (kkt_upper.rows() != kkt_upper.cols()) throw ArgumentError("KKT matrix must be square");
  KktFactorization f;
  f.impl_->ldlt.analyzePattern(kkt_upper);
  f.impl_->numeric(kkt_upper);
  return f;
}

void KktFactorization::refactor(const SpMat& kkt_upper) {
  if (kkt_upper.rows() != dim() || kkt_upper.nonZeros() != impl_->matrix.nonZeros())
    throw ArgumentError("refactor() requires the sparsity pattern of the original matrix");
  impl_->numeric(kkt_upper);
}

Vec KktFactorization::solve(const Vec& rhs) const {
  if (rhs.size() != dim()) throw ArgumentError("right-hand side has the wrong size");
  return impl_->ldlt.solve(rhs);
}

int KktFactorization::dim() const { return static_cast<int>(impl_->matrix.rows()); }

Eigen::VectorXi KktFactorization::permutation() const { return impl_->ldlt.permutationP().indices(); }

SpMat KktFactorization::L() const { return SpMat(impl_->ldlt.matrixL()); }

Vec KktFactorization::D() const { return impl_->ldlt.vectorD(); }

const SpMat& KktFactorization::matrix() const { return impl_->matrix; }

Block1Solution solve_direct(const KktFactorization& fact, const Vec& rhs, int n, int m, int p) {
  if (fact.dim() != n + m + p) throw ArgumentError("factorization does not match (n, m, p)");
  Vec sol = fact.solve(rhs);
  const Vec resid = rhs - fact.matrix().selfadjointView<Eigen::Upper>() * sol;
  sol += fact.solve(resid);
  return {sol.head(n), sol.segment(n, m), sol.tail(p)};
}

Block1Recovery recover_block1(const SolverState& st, const SolverParams& params, const Vec& nu_I,
                              const Vec& nu_E) {
  Block1Recovery r;
  r.s_tilde = st.s - (st.w_s + nu_I).cwiseQuotient(params.sigma_s);
  r.z_I_tilde = st.z_I + (nu_I - st.y_I).cwiseQuotient(params.rho_I);
  r.z_E_tilde = st.z_E + (nu_E - st.y_E).cwiseQuotient(params.rho_E);
  return r;
}

// ---------------------------------------------------------------------------

void CgConfig::validate() const {
  if (!(tol > 0.0)) throw ParameterError("CG tolerance must be positive");
  if (max_iter < 0) throw ParameterError("CG max_iter must be at least 1");
}

namespace {

/// Reduced operator (P + sigma_x I + G' diag(g) G + A' diag(rho_E) A).
class ReducedOperator {
 public:
  ReducedOperator(const QpProblem& prob, const SolverParams& params)
      : prob_(prob), sigma_x_(params.sigma_x), rho_E_(params.rho_E) {
    g_ = (params.sigma_s.cwiseInverse() + params.rho_I.cwiseInverse()).cwiseInverse();
  }

  Vec apply(const Vec& v) const {
    Vec out = prob_.P_times(v) + sigma_x_ * v;
    if (prob_.m() > 0) out += prob_.G().transpose() * g_.cwiseProduct(prob_.G() * v);
    if (prob_.p() > 0) out += prob_.A().transpose() * rho_E_.cwiseProduct(prob_.A() * v);
    return out;
  }

  Vec diagonal() const {
    const int n = prob_.n();
    Vec d = Vec::Constant(n, sigma_x_);
    for (int j = 0; j < n; ++j) {
      for (SpMat::InnerIterator it(prob_.P(), j); it; ++it)
        if (it.row() == j) d[j] += it.value();
      for (SpMat::InnerIterator it(prob_.G(), j); it; ++it) d[j] += g_[it.row()] * it.value() * it.value();
      for (SpMat::InnerIterator it(prob_.A(), j); it; ++it)
        d[j] += rho_E_[it.row()] * it.value() * it.value();
    }
    return d;
  }

  const Vec& g() const { return g_; }

 private:
  const QpProblem& prob_;
  double sigma_x_;
  Vec rho_E_;
  Vec g_;
};

}  // namespace

IndirectSolution solve_indirect(const QpProblem& prob, const SolverParams& params,
                                const SolverState& st, const CgConfig& cfg) {
  cfg.validate();
  params.validate(prob.m(), prob.p());
  const int n = prob.n();
  const ReducedOperator K(prob, params);
  const BlockRhs br = block_rhs(prob, params, st);

  Vec rhs = br.r_x;
  if (prob.m() > 0) rhs += prob.G().transpose() * K.g().cwiseProduct(br.r_I);
  if (prob.p() > 0) rhs += prob.A().transpose() * params.rho_E.cwiseProduct(br.r_E);

  Vec inv_diag = Vec::Ones(n);
  if (cfg.preconditioner == Preconditioner::Jacobi) inv_diag = K.diagonal().cwiseInverse();

  IndirectSolution out;
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 10 * n;
  const double rhs_norm = rhs.norm();
  Vec x = st.x_tilde.size() == n ? st.x_tilde : Vec::Zero(n);
  if (rhs_norm == 0.0) {
    x.setZero();
    out.converged = true;
  } else {
    const double target = cfg.tol * rhs_norm;
    Vec r = rhs - K.apply(x);
    Vec best = x;
    double best_norm = r.norm();
    bool restarted = false;
    Vec z = inv_diag.cwiseProduct(r);
    Vec d = z;
    double rz = r.dot(z);
    int it = 0;
    while (it < max_iter && r.norm() > target) {
      const Vec Kd = K.apply(d);
      const double curvature = d.dot(Kd);
      if (!(curvature > 0.0)) {
        if (restarted)
          throw FactorizationError("CG breakdown (non-positive curvature) after restart at iteration " +
                                   std::to_string(it));
        restarted = true;
        r = rhs - K.apply(x);
        z = inv_diag.cwiseProduct(r);
        d = z;
        rz = r.dot(z);
        continue;
      }
      const double step = rz / curvature;
      x += step * d;
      r -= step * Kd;
      z = inv_diag.cwiseProduct(r);
      const double rz_next = r.dot(z);
      d = z + (rz_next / rz) * d;
      rz = rz_next;
      ++it;
      const double rn = r.norm();
      if (rn < best_norm) {
        best_norm = rn;
        best = x;
      }
    }
    out.cg_iters = it;
    out.converged = r.norm() <= target;
    if (!out.converged) x = best;
  }

  out.x_tilde = x;
  out.nu_I = prob.m() > 0 ? Vec(K.g().cwiseProduct(prob.G() * x - br.r_I)) : Vec(0);
  out.nu_E = prob.p() > 0 ? Vec(params.rho_E.cwiseProduct(prob.A() * x - br.r_E)) : Vec(0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool outside_band(double a, double b, double band) {
  const double ratio = b / a;
  return ratio > band || ratio < 1.0 / band;
}

bool outside_band(const Vec& a, const Vec& b, double band) {
  if (a.size() != b.size()) return true;
  for (int i = 0; i < a.size(); ++i)
    if (outside_band(a[i], b[i], band)) return true;
  return false;
}

}  // namespace

bool should_refactor(const KktParams& o, const KktParams& n, double band) {
  return outside_band(o.sigma_x, n.sigma_x, band) || outside_band(o.sigma_s, n.sigma_s, band) ||
         outside_band(o.rho_I, n.rho_I, band) || outside_band(o.rho_E, n.rho_E, band);
}

bool should_refactor(const SolverParams& o, const SolverParams& n, double band) {
  return should_refactor(KktParams::from(o), KktParams::from(n), band);
}

// ---------------------------------------------------------------------------

Block1Solver::Block1Solver(const QpProblem& prob, LinearMethod method, CgConfig cg, double band)
    : prob_(&prob), method_(method), cg_(cg), band_(band) {
  if (!(band_ >= 1.0)) throw ParameterError("refactorization band must be >= 1");
  if (method_ == LinearMethod::Indirect) cg_.validate();
}

void Block1Solver::refactor(const SolverParams& params) {
  const SpMat kkt = assemble_kkt(*prob_, params);
  if (!fact_)
    fact_ = std::make_unique<KktFactorization>(KktFactorization::factor(kkt));
  else
    fact_->refactor(kkt);
  fact_->params_snapshot = KktParams::from(params);
  ++factorizations_;
}

SolverParams Block1Solver::accept(const SolverParams& proposed) {
  proposed.validate(prob_->m(), prob_->p());
  if (method_ == LinearMethod::Indirect) return proposed;
  if (!fact_ || should_refactor(fact_->params_snapshot, KktParams::from(proposed), band_)) {
    refactor(proposed);
    return proposed;
  }
  SolverParams effective = proposed;
  effective.sigma_x = fact_->params_snapshot.sigma_x;
  effective.sigma_s = fact_->params_snapshot.sigma_s;
  effective.rho_I = fact_->params_snapshot.rho_I;
  effective.rho_E = fact_->params_snapshot.rho_E;
  return effective;
}

Block1Solver::Result Block1Solver::solve(const SolverState& state, const SolverParams& params) {
  if (method_ == LinearMethod::Direct) {
    if (!fact_) refactor(params);
    const Vec rhs = kkt_rhs(*prob_, params, state);
    Block1Solution s = solve_direct(*fact_, rhs, prob_->n(), prob_->m(), prob_->p());
    return {std::move(s.x_tilde), std::move(s.nu_I), std::move(s.nu_E)};
  }
  IndirectSolution s = solve_indirect(*prob_, params, state, cg_);
  cg_iterations_ += s.cg_iters;
  if (!s.converged) ++cg_failures_;
  return {std::move(s.x_tilde), std::move(s.nu_I), std::move(s.nu_E)};
}

}  // namespace flexqp
