#include "flexqp/sqp.hpp"

#include "flexqp/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <optional>

namespace flexqp {

void NlpSpec::validate() const {
  if (n <= 0 || m < 0 || p < 0) throw ArgumentError("NlpSpec: bad dimensions");
  if (!f || !grad_f || !hessian) throw ArgumentError("NlpSpec: f, grad_f and hessian are required");
  if (m > 0 && (!g || !jac_g)) throw ArgumentError("NlpSpec: g and jac_g are required when m > 0");
  if (p > 0 && (!h || !jac_h)) throw ArgumentError("NlpSpec: h and jac_h are required when p > 0");
  if (x0.size() != n) throw ArgumentError("NlpSpec: x0 has the wrong size");
}

NlpSpec nlp_from_qp(const QpProblem& prob, const Vec& x0) {
  check_dim(x0, prob.n(), "x0");
  auto qp = std::make_shared<const QpProblem>(prob);
  SpMat full = prob.P().selfadjointView<Eigen::Upper>();
  NlpSpec nlp;
  nlp.n = prob.n();
  nlp.m = prob.m();
  nlp.p = prob.p();
  nlp.f = [qp](const Vec& x) { return objective(*qp, x); };
  nlp.grad_f = [qp](const Vec& x) -> Vec { return qp->P_times(x) + qp->q(); };
  nlp.g = [qp](const Vec& x) -> Vec { return qp->G() * x - qp->h(); };
  nlp.jac_g = [qp](const Vec&) { return qp->G(); };
  nlp.h = [qp](const Vec& x) -> Vec { return qp->A() * x - qp->b(); };
  nlp.jac_h = [qp](const Vec&) { return qp->A(); };
  nlp.hessian = [full](const Vec&, const Vec&, const Vec&) { return full; };
  nlp.x0 = x0;
  nlp.name = prob.name();
  return nlp;
}

namespace {

void check_vec(const Vec& v, int size, const char* what) {
  if (v.size() != size)
    throw SqpError(std::string("evaluator '") + what + "' returned size " + std::to_string(v.size()) +
                   ", expected " + std::to_string(size));
  if (!v.allFinite()) throw SqpError(std::string("evaluator '") + what + "' returned a non-finite value");
}

void check_mat(const SpMat& M, int rows, int cols, const char* what) {
  if (M.rows() != rows || M.cols() != cols)
    throw SqpError(std::string("evaluator '") + what + "' returned a matrix of the wrong shape");
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      if (!std::isfinite(it.value()))
        throw SqpError(std::string("evaluator '") + what + "' returned a non-finite value");
}

double l1_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<1>(); }

}  // namespace

NlpEval evaluate(const NlpSpec& nlp, const Vec& x) {
  NlpEval ev;
  ev.f = nlp.f(x);
  if (!std::isfinite(ev.f)) throw SqpError("evaluator 'f' returned a non-finite value");
  ev.grad_f = nlp.grad_f(x);
  check_vec(ev.grad_f, nlp.n, "grad_f");
  if (nlp.m > 0) {
    ev.g = nlp.g(x);
    check_vec(ev.g, nlp.m, "g");
    ev.jac_g = nlp.jac_g(x);
    check_mat(ev.jac_g, nlp.m, nlp.n, "jac_g");
  } else {
    ev.g = Vec(0);
    ev.jac_g = SpMat(0, nlp.n);
  }
  if (nlp.p > 0) {
    ev.h = nlp.h(x);
    check_vec(ev.h, nlp.p, "h");
    ev.jac_h = nlp.jac_h(x);
    check_mat(ev.jac_h, nlp.p, nlp.n, "jac_h");
  } else {
    ev.h = Vec(0);
    ev.jac_h = SpMat(0, nlp.n);
  }
  return ev;
}

double psd_shift(const SpMat& H) {
  const int n = static_cast<int>(H.rows());
  double hmax = 0.0;
  for (int k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it) hmax = std::max(hmax, std::abs(it.value()));

  SpMat I(n, n);
  I.setIdentity();
  Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt;
  ldlt.analyzePattern(H + I);  // pattern including the diagonal
  const double floor = -1e-12 * std::max(1.0, hmax);
  double tau = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    ldlt.factorize(H + tau * I);
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= floor) return tau;
    tau = tau == 0.0 ? 1e-8 * std::max(1.0, hmax) : 10.0 * tau;
  }
  throw SqpError("could not shift the Hessian to a positive semidefinite matrix");
}

QpProblem build_subproblem(const NlpSpec& nlp, const NlpEval& ev, const Vec& x, const Vec& y_I,
                           const Vec& y_E, double hess_reg) {
  if (hess_reg < 0.0) throw ParameterError("hess_reg must be nonnegative");
  SpMat H = nlp.hessian(x, y_I, y_E);
  check_mat(H, nlp.n, nlp.n, "hessian");
  SpMat I(nlp.n, nlp.n);
  I.setIdentity();
  if (hess_reg > 0.0) H += hess_reg * I;
  const double tau = psd_shift(H);
  if (tau > 0.0) H += tau * I;
  SpMat upper = H.triangularView<Eigen::Upper>();
  return QpProblem(upper, ev.grad_f, ev.jac_g, -ev.g, ev.jac_h, -ev.h, nlp.name);
}

QpProblem build_subproblem(const NlpSpec& nlp, const Vec& x, const Vec& y_I, const Vec& y_E,
                           double hess_reg) {
  return build_subproblem(nlp, evaluate(nlp, x), x, y_I, y_E, hess_reg);
}

double NlpResidual::inf_norm() const { return std::max(stationarity, primal); }

NlpResidual nlp_residual(const NlpEval& ev, const Vec& y_I, const Vec& y_E) {
  NlpResidual r;
  Vec stat = ev.grad_f;
  if (ev.g.size() > 0) stat += ev.jac_g.transpose() * y_I;
  if (ev.h.size() > 0) stat += ev.jac_h.transpose() * y_E;
  r.stationarity = inf_norm(stat);
  if (ev.g.size() > 0) {
    r.primal = inf_norm(ev.g.cwiseMax(0.0));
    r.complementarity = inf_norm(y_I.cwiseMin(-ev.g));
  }
  r.primal = std::max(r.primal, inf_norm(ev.h));
  return r;
}

double l1_merit(const NlpEval& ev, double mu) {
  return ev.f + mu * (l1_norm(ev.h) + l1_norm(ev.g.cwiseMax(0.0)));
}

SolveSettings SqpSettings::default_qp_settings() {
  SolveSettings s;
  s.eps_abs = 1e-3;
  s.max_iter = 20000;
  s.time_limit = std::chrono::duration<double>(10.0);
  // Trajectory subproblems carry multipliers in the thousands and are badly
  // balanced between primal and dual residuals; the residual-balancing rule
  // oscillates on them while a fixed, larger penalty converges.
  ScalarParams p;
  p.rho_I = p.rho_E = p.sigma_s = 10.0;
  p.mu_I = p.mu_E = 1e4;
  s.policy = std::make_shared<ParamPolicy>(ParamPolicy::fixed(p));
  return s;
}

void SqpSettings::validate() const {
  if (max_iter < 0) throw ParameterError("max_iter must be nonnegative");
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  if (hess_reg < 0.0) throw ParameterError("hess_reg must be nonnegative");
  if (!(merit.armijo > 0.0 && merit.armijo < 1.0)) throw ParameterError("armijo constant must be in (0, 1)");
  if (merit.max_halvings < 0) throw ParameterError("max_halvings must be nonnegative");
  if (merit.refinements < 0 || !(merit.refine_factor > 1.0))
    throw ParameterError("refinements must be nonnegative and refine_factor > 1");
  qp.validate();
}

const char* to_string(SqpStatus status) {
  switch (status) {
    case SqpStatus::Converged: return "Converged";
    case SqpStatus::MaxIter: return "MaxIter";
    case SqpStatus::Stalled: return "Stalled";
  }
  return "?";
}

SqpResult sqp_solve(const NlpSpec& nlp, const SqpSettings& settings) {
  nlp.validate();
  settings.validate();

  SqpResult res;
  Vec x = nlp.x0;
  Vec y_I = Vec::Zero(nlp.m), y_E = Vec::Zero(nlp.p);
  NlpEval ev = evaluate(nlp, x);
  if (settings.record_iterates) res.iterates.push_back(x);

  auto finish = [&](SqpStatus status, int iters, const NlpResidual& r) {
    res.x = x;
    res.y_I = y_I;
    res.y_E = y_E;
    res.status = status;
    res.iterations = iters;
    res.residual = r;
    return res;
  };

  std::optional<SolverState> prev_state;
  for (int k = 0;; ++k) {
    const NlpResidual r = nlp_residual(ev, y_I, y_E);
    if (r.inf_norm() <= settings.eps) return finish(SqpStatus::Converged, k, r);
    if (k >= settings.max_iter) return finish(SqpStatus::MaxIter, k, r);

    const QpProblem sub = build_subproblem(nlp, ev, x, y_I, y_E, settings.hess_reg);
    SolveSettings qps = settings.qp;
    SolveResult qp = solve(sub, qps, settings.warm_start && prev_state ? &*prev_state : nullptr);

    SqpIteration it;
    it.iter = k;
    it.residual = r;
    it.qp_iterations = qp.solution.iterations;

    double alpha = 1.0;
    bool accepted = false;
    NlpEval trial;
    for (;;) {
      const Vec& dx = qp.solution.x;
      it.qp_status = qp.solution.status;
      const double ymax = std::max(inf_norm(qp.solution.y_I), inf_norm(qp.solution.y_E));
      it.merit_mu = 2.0 * ymax + 1.0;
      it.merit_before = l1_merit(ev, it.merit_mu);

      // Directional derivative of the merit along dx, with the constraint
      // part taken from the linearization the subproblem actually achieved.
      const double viol = l1_norm(ev.h) + l1_norm(ev.g.cwiseMax(0.0));
      double lin_viol = 0.0;
      if (nlp.p > 0) lin_viol += l1_norm(ev.h + ev.jac_h * dx);
      if (nlp.m > 0) lin_viol += l1_norm((ev.g + ev.jac_g * dx).cwiseMax(0.0));
      it.directional_derivative = ev.grad_f.dot(dx) + it.merit_mu * (lin_viol - viol);

      alpha = 1.0;
      if (!settings.merit.line_search) {
        trial = evaluate(nlp, x + dx);
        accepted = true;
        break;
      }
      // A non-descent direction is refined first; only the most accurate
      // subproblem solution may fall back to plain decrease.
      const bool last = it.qp_refinements >= settings.merit.refinements;
      const bool descent = it.directional_derivative < 0.0;
      const double slope = std::min(it.directional_derivative, 0.0);
      const double tol = 1e-12 * std::max(1.0, std::abs(it.merit_before));
      for (int halving = 0; (descent || last) && halving <= settings.merit.max_halvings; ++halving) {
        bool finite = true;
        try {
          trial = evaluate(nlp, x + alpha * dx);
        } catch (const SqpError&) {
          finite = false;  // step left the domain; backtrack
        }
        if (finite) {
          const double phi = l1_merit(trial, it.merit_mu);
          if (phi <= it.merit_before + settings.merit.armijo * alpha * slope && phi < it.merit_before + tol) {
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (accepted || last) break;
      ++it.qp_refinements;
      qps.eps_abs /= settings.merit.refine_factor;
      qp = solve(sub, qps, &qp.state);
      it.qp_iterations += qp.solution.iterations;
    }
    prev_state = qp.state;
    const Vec& dx = qp.solution.x;
    const Vec& qy_I = qp.solution.y_I;
    const Vec& qy_E = qp.solution.y_E;

    y_I = qy_I;
    y_E = qy_E;
    if (!accepted) {
      it.step = 0.0;
      it.merit_after = it.merit_before;
      res.history.push_back(it);
      const NlpResidual rz = nlp_residual(ev, y_I, y_E);
      return finish(rz.inf_norm() <= settings.eps ? SqpStatus::Converged : SqpStatus::Stalled, k + 1, rz);
    }
    x += alpha * dx;
    ev = std::move(trial);
    it.step = alpha;
    it.merit_after = l1_merit(ev, it.merit_mu);
    res.history.push_back(it);
    if (settings.record_iterates) res.iterates.push_back(x);
  }
}

}  // namespace flexqp
