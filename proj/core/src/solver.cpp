#include "flexqp/solver.hpp"

#include "flexqp/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flexqp {

// ---------------------------------------------------------------------------
// SolverParams / SolverState

SolverParams SolverParams::broadcast(int m, int p, const ScalarParams& s) {
  SolverParams out;
  out.mu_I = Vec::Constant(m, s.mu_I);
  out.mu_E = Vec::Constant(p, s.mu_E);
  out.sigma_x = s.sigma_x;
  out.sigma_s = Vec::Constant(m, s.sigma_s);
  out.rho_I = Vec::Constant(m, s.rho_I);
  out.rho_E = Vec::Constant(p, s.rho_E);
  out.alpha = s.alpha;
  return out;
}

namespace {

void require_positive(const Vec& v, int size, const char* what) {
  check_dim(v, size, what);
  for (int i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0) || !std::isfinite(v[i]))
      throw ParameterError(std::string(what) + "[" + std::to_string(i) + "] must be positive and finite");
}

}  // namespace

void SolverParams::validate(int m, int p) const {
  require_positive(mu_I, m, "mu_I");
  require_positive(mu_E, p, "mu_E");
  require_positive(sigma_s, m, "sigma_s");
  require_positive(rho_I, m, "rho_I");
  require_positive(rho_E, p, "rho_E");
  if (!(sigma_x > 0.0) || !std::isfinite(sigma_x)) throw ParameterError("sigma_x must be positive");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("alpha must lie in (0, 2)");
}

SolverParams SolverParams::clamped() const {
  auto clamp = [](const Vec& v) { return Vec(v.cwiseMax(kParamMin).cwiseMin(kParamMax)); };
  SolverParams out = *this;
  out.mu_I = clamp(mu_I);
  out.mu_E = clamp(mu_E);
  out.sigma_s = clamp(sigma_s);
  out.rho_I = clamp(rho_I);
  out.rho_E = clamp(rho_E);
  out.sigma_x = std::clamp(sigma_x, kParamMin, kParamMax);
  return out;
}

SolverState SolverState::cold_start(const QpProblem& prob) {
  const int n = prob.n(), m = prob.m(), p = prob.p();
  SolverState st;
  st.x = st.x_tilde = st.x_prev = Vec::Zero(n);
  st.s = prob.h().cwiseMax(0.0);
  st.s_tilde = st.s_prev = st.s;
  st.z_I = st.z_I_tilde = st.z_I_prev = st.w_s = st.y_I = st.nu_I = Vec::Zero(m);
  st.z_E = st.z_E_tilde = st.z_E_prev = st.y_E = st.nu_E = Vec::Zero(p);
  st.k = 0;
  return st;
}

void SolverState::check_dims(const QpProblem& prob) const {
  const int n = prob.n(), m = prob.m(), p = prob.p();
  for (const Vec* v : {&x, &x_tilde, &x_prev}) check_dim(*v, n, "state (n-block)");
  for (const Vec* v : {&s, &s_tilde, &z_I, &z_I_tilde, &w_s, &y_I, &nu_I, &s_prev, &z_I_prev})
    check_dim(*v, m, "state (m-block)");
  for (const Vec* v : {&z_E, &z_E_tilde, &y_E, &nu_E, &z_E_prev}) check_dim(*v, p, "state (p-block)");
}

// ---------------------------------------------------------------------------

Vec soft_threshold(const Vec& v, const Vec& kappa) {
  if (kappa.size() != v.size()) throw ArgumentError("soft_threshold: kappa size mismatch");
  Vec out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    if (!(kappa[i] >= 0.0)) throw ParameterError("soft_threshold: kappa must be nonnegative");
    out[i] = std::max(v[i] - kappa[i], 0.0) - std::max(-v[i] - kappa[i], 0.0);
  }
  return out;
}

Vec soft_threshold(const Vec& v, double kappa) {
  return soft_threshold(v, Vec::Constant(v.size(), kappa));
}

SolverState admm_step(const QpProblem& prob, const SolverState& st, const SolverParams& params,
                      Block1Solver& linear) {
  const double a = params.alpha;
  Block1Solver::Result b1;
  try {
    b1 = linear.solve(st, params);
  } catch (const FactorizationError& e) {
    throw FactorizationError(std::string(e.what()) + " (ADMM iteration " + std::to_string(st.k) + ")");
  }
  const Block1Recovery rec = recover_block1(st, params, b1.nu_I, b1.nu_E);

  SolverState next;
  next.k = st.k + 1;
  next.x_prev = st.x;
  next.s_prev = st.s;
  next.z_I_prev = st.z_I;
  next.z_E_prev = st.z_E;
  next.x_tilde = std::move(b1.x_tilde);
  next.nu_I = std::move(b1.nu_I);
  next.nu_E = std::move(b1.nu_E);
  next.s_tilde = rec.s_tilde;
  next.z_I_tilde = rec.z_I_tilde;
  next.z_E_tilde = rec.z_E_tilde;

  // Over-relaxed second block. The dual updates use the relaxed copies, which
  // keeps the x-multiplier identically zero for every alpha.
  next.x = a * next.x_tilde + (1.0 - a) * st.x;

  const Vec v_s = a * next.s_tilde + (1.0 - a) * st.s + st.w_s.cwiseQuotient(params.sigma_s);
  next.s = v_s.cwiseMax(0.0);
  next.w_s = params.sigma_s.cwiseProduct(v_s.cwiseMin(0.0));

  // y = rho * (v - S_kappa(v)) = rho * clamp(v, -kappa, kappa), so |y| <= mu.
  auto elastic_block = [a](const Vec& z_tilde, const Vec& z, const Vec& y, const Vec& rho,
                           const Vec& mu, Vec& z_out, Vec& y_out) {
    const Vec v = a * z_tilde + (1.0 - a) * z + y.cwiseQuotient(rho);
    const Vec kappa = mu.cwiseQuotient(rho);
    z_out = soft_threshold(v, kappa);
    y_out.resize(v.size());
    for (int i = 0; i < v.size(); ++i) {
      y_out[i] = rho[i] * std::clamp(v[i], -kappa[i], kappa[i]);
    }
  };
  elastic_block(next.z_I_tilde, st.z_I, st.y_I, params.rho_I, params.mu_I, next.z_I, next.y_I);
  elastic_block(next.z_E_tilde, st.z_E, st.y_E, params.rho_E, params.mu_E, next.z_E, next.y_E);
  (void)prob;
  return next;
}

SolverState admm_step(const QpProblem& prob, const SolverState& state, const SolverParams& params,
                      const SolveSettings& settings) {
  state.check_dims(prob);
  CgConfig cg = settings.cg;
  if (cg.tol <= 0.0) cg.tol = 1e-2 * settings.eps_abs;
  Block1Solver linear(prob, settings.method, cg, settings.refactor_band);
  const SolverParams effective = linear.accept(params);
  return admm_step(prob, state, effective, linear);
}

// ---------------------------------------------------------------------------

void SolveSettings::validate() const {
  if (!(eps_abs > 0.0)) throw ParameterError("eps_abs must be positive");
  if (max_iter < 0) throw ParameterError("max_iter must be nonnegative");
  if (check_every < 1) throw ParameterError("check_every must be at least 1");
  if (time_limit && time_limit->count() < 0.0) throw ParameterError("time limit must be nonnegative");
}

SolveResult solve(const QpProblem& prob, const SolveSettings& settings, const SolverState* warm_start) {
  settings.validate();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();

  static const ParamPolicy kDefaultPolicy = ParamPolicy::fixed(ScalarParams{});
  const ParamPolicy& policy = settings.policy ? *settings.policy : kDefaultPolicy;
  auto session = policy.start(prob);

  SolverState state = warm_start ? *warm_start : SolverState::cold_start(prob);
  state.check_dims(prob);

  CgConfig cg = settings.cg;
  if (cg.tol <= 0.0) cg.tol = 1e-2 * settings.eps_abs;
  Block1Solver linear(prob, settings.method, cg, settings.refactor_band);

  SolveResult result;
  SolverParams params = session->initial();
  params.validate(prob.m(), prob.p());
  SolveStatus status = SolveStatus::MaxIter;
  int iters = 0;

  for (;;) {
    const ResidualBundle bundle = relaxed_residuals(prob, state);
    if (settings.record_trace) result.trace.push_back(bundle);

    if (settings.time_limit &&
        std::chrono::duration<double>(Clock::now() - t0) >= *settings.time_limit) {
      status = SolveStatus::Timeout;
      break;
    }
    const double relaxed = bundle.relaxed_inf();
    if (!std::isfinite(relaxed) || relaxed > settings.divergence_threshold) {
      status = SolveStatus::Unbounded;
      break;
    }
    if (iters % settings.check_every == 0 || iters == settings.max_iter) {
      const double admm = std::max(bundle.admm_primal_inf(), bundle.admm_dual_inf());
      if (relaxed <= settings.eps_abs && admm <= settings.eps_abs) {
        const double violation = std::max(inf_norm(state.z_I), inf_norm(state.z_E));
        if (violation > settings.eps_abs) {
          status = SolveStatus::SolvedInfeasibleOriginal;
          break;
        }
        // z ~ 0 still allows ||R|| up to about 2 eps; keep iterating until
        // the original residual itself is below the tolerance.
        if (bundle.qp_residual_inf <= settings.eps_abs) {
          status = SolveStatus::Solved;
          break;
        }
      }
    }
    if (iters >= settings.max_iter) {
      status = SolveStatus::MaxIter;
      break;
    }

    const SolverParams proposed = session->next(bundle, state, params);
    params = linear.accept(proposed);
    state = admm_step(prob, state, params, linear);
    ++iters;
    if (settings.on_iterate) settings.on_iterate(state, params);
  }

  QpSolution& sol = result.solution;
  sol.x = state.x;
  sol.y_I = state.y_I;
  sol.y_E = state.y_E;
  sol.z_I = state.z_I;
  sol.z_E = state.z_E;
  sol.status = status;
  sol.iterations = iters;
  sol.stats["factorizations"] = linear.factorizations();
  sol.stats["cg_iterations"] = linear.cg_iterations();
  sol.stats["cg_failures"] = linear.cg_failures();
  result.state = std::move(state);
  result.final_params = std::move(params);
  return result;
}

FeasibilityReport classify_feasibility(const QpSolution& solution, double eps) {
  FeasibilityReport r;
  for (int i = 0; i < solution.z_I.size(); ++i)
    if (std::abs(solution.z_I[i]) > eps) r.violated_inequalities.push_back(i);
  for (int j = 0; j < solution.z_E.size(); ++j)
    if (std::abs(solution.z_E[j]) > eps) r.violated_equalities.push_back(j);
  r.feasible = r.violated_inequalities.empty() && r.violated_equalities.empty();
  return r;
}

}  // namespace flexqp
