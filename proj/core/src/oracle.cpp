#include "flexqp/oracle.hpp"

#include "flexqp/error.hpp"
#include "flexqp/solver.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <vector>

namespace flexqp {

namespace {

struct Dense {
  Mat P, G, A;
  Vec q, h, b;
};

// Next k-subset of {0..m-1} in lexicographic order; false when exhausted.
bool next_combination(std::vector<int>& idx, int m) {
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[i] == m - k + i) --i;
  if (i < 0) return false;
  ++idx[i];
  for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  return true;
}

bool try_active_set(const Dense& d, const std::vector<int>& active, double tol, QpSolution& out) {
  const int n = static_cast<int>(d.q.size());
  const int m = static_cast<int>(d.h.size());
  const int p = static_cast<int>(d.b.size());
  const int k = static_cast<int>(active.size());
  const int dim = n + k + p;

  Mat K = Mat::Zero(dim, dim);
  Vec rhs(dim);
  K.topLeftCorner(n, n) = d.P;
  rhs.head(n) = -d.q;
  for (int r = 0; r < k; ++r) {
    K.block(n + r, 0, 1, n) = d.G.row(active[r]);
    K.block(0, n + r, n, 1) = d.G.row(active[r]).transpose();
    rhs[n + r] = d.h[active[r]];
  }
  if (p > 0) {
    K.block(n + k, 0, p, n) = d.A;
    K.block(0, n + k, n, p) = d.A.transpose();
    rhs.tail(p) = d.b;
  }

  Vec sol = Eigen::PartialPivLU<Mat>(K).solve(rhs);
  if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > tol) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
    sol = cod.solve(rhs);
    if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > tol) return false;
  }

  const Vec x = sol.head(n);
  Vec y_I = Vec::Zero(m);
  for (int r = 0; r < k; ++r) {
    if (sol[n + r] < -tol) return false;
    y_I[active[r]] = std::max(sol[n + r], 0.0);
  }
  if (m > 0 && ((d.G * x - d.h).array() > tol).any()) return false;

  out.x = x;
  out.y_I = y_I;
  out.y_E = p > 0 ? Vec(sol.tail(p)) : Vec(0);
  out.z_I = Vec::Zero(m);
  out.z_E = Vec::Zero(p);
  out.status = SolveStatus::Solved;
  return true;
}

}  // namespace

QpSolution oracle_solve(const QpProblem& prob, const OracleOptions& opts) {
  const int n = prob.n(), m = prob.m(), p = prob.p();
  if (n > opts.max_n || m > opts.max_m)
    throw ArgumentError("oracle_solve is limited to n <= " + std::to_string(opts.max_n) + " and m <= " +
                        std::to_string(opts.max_m));

  Dense d{prob.P_dense(), Mat(prob.G()), Mat(prob.A()), prob.q(), prob.h(), prob.b()};
  // Scale the acceptance tolerance with the data so that it is meaningful
  // for entries far from unit size.
  double scale = 1.0;
  for (const Vec* v : {&d.q, &d.h, &d.b}) scale = std::max(scale, inf_norm(*v));
  const double tol = opts.tol * scale;

  QpSolution out;
  for (int k = 0; k <= std::min(m, n); ++k) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    do {
      if (try_active_set(d, idx, tol, out)) return out;
    } while (k > 0 && next_combination(idx, m));
  }

  // No KKT point: decide between infeasible and unbounded with a phase-1
  // elastic problem (zero objective, unit penalties).
  const QpProblem phase1(SpMat(n, n), Vec::Zero(n), prob.G(), prob.h(), prob.A(), prob.b(), "phase1");
  ScalarParams sp;
  sp.mu_I = sp.mu_E = 1.0;
  SolveSettings settings;
  settings.eps_abs = 1e-8;
  settings.max_iter = 200000;
  settings.policy = std::make_shared<ParamPolicy>(ParamPolicy::fixed(sp));
  const SolveResult r = solve(phase1, settings);
  const Vec& x = r.solution.x;
  const Vec vI = m > 0 ? Vec((prob.G() * x - prob.h()).cwiseMax(0.0)) : Vec(0);
  const Vec vE = p > 0 ? Vec(prob.A() * x - prob.b()) : Vec(0);
  const double violation = (m > 0 ? vI.sum() : 0.0) + (p > 0 ? vE.cwiseAbs().sum() : 0.0);

  out.x = x;
  out.y_I = r.solution.y_I;
  out.y_E = r.solution.y_E;
  out.z_I = vI;
  out.z_E = vE;
  out.iterations = r.solution.iterations;
  out.status = violation > 1e-6 ? SolveStatus::SolvedInfeasibleOriginal : SolveStatus::Unbounded;
  return out;
}

}  // namespace flexqp
