#include "flexqp/tasks.hpp"

#include "flexqp/error.hpp"
#include "flexqp/io.hpp"
#include "flexqp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flexqp {

using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
using Vec3 = Eigen::Vector3d;

void check_obstacles(const std::vector<Obstacle>& obs, int nx, const char* who) {
  for (const Obstacle& o : obs) {
    if (o.center.size() < 1 || o.center.size() > std::min(nx, 3))
      throw SpecError(std::string(who) + ": obstacle center has the wrong dimension");
    if (!(o.radius > 0.0) || !o.center.allFinite()) throw SpecError(std::string(who) + ": obstacle radius must be positive");
  }
}

void check_bounds(const Vec& lo, const Vec& hi, int nu, const char* who) {
  if (lo.size() != nu || hi.size() != nu) throw SpecError(std::string(who) + ": control bounds have the wrong size");
  if (!lo.allFinite() || !hi.allFinite() || (lo.array() > hi.array()).any())
    throw SpecError(std::string(who) + ": control bounds must be finite with u_min <= u_max");
}

double sq_dist(const Vec& state, const Obstacle& o) {
  return (state.head(o.center.size()) - o.center).squaredNorm();
}

// Scatter a dense block into triplets.
void add_block(std::vector<Triplet>& t, int r0, int c0, const Mat& B, double scale = 1.0) {
  for (int j = 0; j < B.cols(); ++j)
    for (int i = 0; i < B.rows(); ++i)
      if (B(i, j) != 0.0) t.emplace_back(r0 + i, c0 + j, scale * B(i, j));
}

// Equality constraints shared by both problem types: x_0 = x0 followed by
// x_{t+1} - F(x_t, u_t) = 0.
Vec dynamics_residual(DynamicsModel model, const TrajectoryLayout& L, const Vec& x0, double dt, const Vec& z) {
  Vec h((L.T + 1) * L.nx);
  h.head(L.nx) = z.segment(0, L.nx) - x0;
  for (int t = 0; t < L.T; ++t)
    h.segment((t + 1) * L.nx, L.nx) = z.segment(L.state(t + 1), L.nx) -
                                      euler_step(model, z.segment(L.state(t), L.nx), z.segment(L.control(t), L.nu), dt);
  return h;
}

SpMat dynamics_jacobian(DynamicsModel model, const TrajectoryLayout& L, double dt, const Vec& z) {
  std::vector<Triplet> t;
  t.reserve((L.T + 1) * L.nx * (1 + L.nx + L.nu));
  for (int i = 0; i < L.nx; ++i) t.emplace_back(i, i, 1.0);
  for (int s = 0; s < L.T; ++s) {
    const StepJacobians J =
        euler_step_jacobians(model, z.segment(L.state(s), L.nx), z.segment(L.control(s), L.nu), dt);
    const int r0 = (s + 1) * L.nx;
    for (int i = 0; i < L.nx; ++i) t.emplace_back(r0 + i, L.state(s + 1) + i, 1.0);
    add_block(t, r0, L.state(s), J.fx, -1.0);
    add_block(t, r0, L.control(s), J.fu, -1.0);
  }
  return make_csc((L.T + 1) * L.nx, L.n(), t);
}

// Multiplier-weighted curvature of the dynamics rows.
void add_dynamics_curvature(std::vector<Triplet>& t, DynamicsModel model, const TrajectoryLayout& L, double dt,
                            const Vec& z, const Vec& y_E) {
  for (int s = 0; s < L.T; ++s) {
    const Vec w = y_E.segment((s + 1) * L.nx, L.nx);
    if (w.isZero(0.0)) continue;
    const Mat H = euler_step_weighted_hessian(model, z.segment(L.state(s), L.nx), z.segment(L.control(s), L.nu), dt, w);
    const int nz = L.nx + L.nu;
    for (int j = 0; j < nz; ++j)
      for (int i = 0; i < nz; ++i) {
        if (H(i, j) == 0.0) continue;
        const int r = i < L.nx ? L.state(s) + i : L.control(s) + i - L.nx;
        const int c = j < L.nx ? L.state(s) + j : L.control(s) + j - L.nx;
        t.emplace_back(r, c, -H(i, j));
      }
  }
}

// Control box rows for every t: u - u_max <= 0 then u_min - u <= 0.
void control_box_values(const TrajectoryLayout& L, const Vec& lo, const Vec& hi, const Vec& z, Vec& g, int row) {
  for (int t = 0; t < L.T; ++t) {
    const Vec u = z.segment(L.control(t), L.nu);
    g.segment(row, L.nu) = u - hi;
    g.segment(row + L.nu, L.nu) = lo - u;
    row += 2 * L.nu;
  }
}

void control_box_jacobian(const TrajectoryLayout& L, std::vector<Triplet>& t, int row) {
  for (int s = 0; s < L.T; ++s) {
    for (int j = 0; j < L.nu; ++j) {
      t.emplace_back(row + j, L.control(s) + j, 1.0);
      t.emplace_back(row + L.nu + j, L.control(s) + j, -1.0);
    }
    row += 2 * L.nu;
  }
}



Mat mat_from_json(const json& j, const char* what) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Mat(0, 0);
  Mat M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw LoadError(std::string("ragged matrix '") + what + "'");
    for (std::size_t k = 0; k < rows[i].size(); ++k) M(i, k) = rows[i][k];
  }
  return M;
}

json mat_to_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    std::vector<double> r(M.cols());
    for (int k = 0; k < M.cols(); ++k) r[k] = M(i, k);
    rows.push_back(r);
  }
  return rows;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from(const json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
}

json obstacles_json(const std::vector<Obstacle>& obs) {
  json a = json::array();
  for (const Obstacle& o : obs) a.push_back({{"center", vec_json(o.center)}, {"radius", o.radius}});
  return a;
}

std::vector<Obstacle> obstacles_from(const json& j) {
  std::vector<Obstacle> out;
  for (const json& o : j) out.push_back({vec_from(o.at("center")), o.at("radius").get<double>()});
  return out;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

// ---------------------------------------------------------------------------

Mat TrajectoryLayout::states(const Vec& z) const {
  Mat S(T + 1, nx);
  for (int t = 0; t <= T; ++t) S.row(t) = z.segment(state(t), nx).transpose();
  return S;
}

Mat TrajectoryLayout::controls(const Vec& z) const {
  Mat U(T, nu);
  for (int t = 0; t < T; ++t) U.row(t) = z.segment(control(t), nu).transpose();
  return U;
}

Vec TrajectoryLayout::pack(const Mat& S, const Mat& U) const {
  if (S.rows() != T + 1 || S.cols() != nx || U.rows() != T || U.cols() != nu)
    throw ArgumentError("trajectory has the wrong shape");
  Vec z(n());
  for (int t = 0; t <= T; ++t) z.segment(state(t), nx) = S.row(t).transpose();
  for (int t = 0; t < T; ++t) z.segment(control(t), nu) = U.row(t).transpose();
  return z;
}

void OcpSpec::validate() const {
  const int nx = state_dim(model), nu = control_dim(model);
  if (T < 1) throw SpecError("OcpSpec: T must be at least 1");
  if (!(dt > 0.0)) throw SpecError("OcpSpec: dt must be positive");
  if (Q.rows() != nx || Q.cols() != nx || Q_T.rows() != nx || Q_T.cols() != nx || R.rows() != nu || R.cols() != nu)
    throw SpecError("OcpSpec: cost matrices have the wrong shape");
  if (!Q.isApprox(Q.transpose()) || !Q_T.isApprox(Q_T.transpose()) || !R.isApprox(R.transpose()))
    throw SpecError("OcpSpec: cost matrices must be symmetric");
  if (x0.size() != nx || x_target.size() != nx || !x0.allFinite() || !x_target.allFinite())
    throw SpecError("OcpSpec: x0 and x_target must be finite states");
  check_obstacles(obstacles, nx, "OcpSpec");
  check_bounds(u_min, u_max, nu, "OcpSpec");
}

void SafetyFilterSpec::validate() const {
  const int nx = state_dim(model), nu = control_dim(model);
  if (T < 1) throw SpecError("SafetyFilterSpec: T must be at least 1");
  if (!(dt > 0.0)) throw SpecError("SafetyFilterSpec: dt must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw SpecError("SafetyFilterSpec: beta must be in (0, 1)");
  if (x0.size() != nx || !x0.allFinite()) throw SpecError("SafetyFilterSpec: x0 must be a finite state");
  if (u_ref.rows() != T || u_ref.cols() != nu || !u_ref.allFinite())
    throw SpecError("SafetyFilterSpec: u_ref must be T x nu and finite");
  check_obstacles(obstacles, nx, "SafetyFilterSpec");
  check_bounds(u_min, u_max, nu, "SafetyFilterSpec");
}

OcpSpec dubins_ocp_defaults() {
  OcpSpec s;
  s.model = DynamicsModel::Dubins;
  s.T = 50;
  s.dt = 0.033;
  s.Q = Vec3(1.0, 1.0, 0.1).asDiagonal();
  s.R = 0.1 * Mat::Identity(2, 2);
  s.Q_T = 100.0 * s.Q;
  s.x0 = Vec::Zero(3);
  s.x_target = Vec::Zero(3);
  s.u_min = Eigen::Vector2d(-10.0, -5.0);
  s.u_max = Eigen::Vector2d(10.0, 5.0);
  return s;
}

OcpSpec quadrotor_ocp_defaults() {
  OcpSpec s;
  s.model = DynamicsModel::Quadrotor;
  s.T = 50;
  s.dt = 0.05;
  Vec q(12);
  q << 1.0, 1.0, 1.0, 0.1, 0.1, 0.1, 1.0, 1.0, 1.0, 0.1, 0.1, 0.1;
  s.Q = q.asDiagonal();
  s.R = 0.01 * Mat::Identity(4, 4);
  s.Q_T = 1000.0 * s.Q;
  s.x0 = Vec::Zero(12);
  s.x_target = Vec::Zero(12);
  s.u_min = Eigen::Vector4d(0.0, -10.0, -10.0, -10.0);
  s.u_max = Eigen::Vector4d(20.0, 10.0, 10.0, 10.0);
  return s;
}

OcpSpec random_dubins_task(std::uint64_t seed) {
  OcpSpec s = dubins_ocp_defaults();
  Rng rng(seed);
  const Vec3 bound(5.0, 5.0, kPi);
  for (int i = 0; i < 3; ++i) s.x0[i] = rng.uniform(-bound[i], bound[i]);
  for (int i = 0; i < 3; ++i) s.x_target[i] = rng.uniform(-bound[i], bound[i]);
  const double d = (s.x_target - s.x0).norm();
  const Vec p0 = s.x0.head(2), p1 = s.x_target.head(2);
  const Vec lo = p0.cwiseMin(p1), hi = p0.cwiseMax(p1);
  for (int k = 0; k < 5; ++k) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000) throw SpecError("could not place an obstacle clear of the start and target");
      Obstacle o;
      o.center = Vec(2);
      o.center << rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]);
      o.radius = rng.uniform(0.01 * d, 0.2 * d);
      if ((p0 - o.center).norm() > o.radius && (p1 - o.center).norm() > o.radius) {
        s.obstacles.push_back(o);
        break;
      }
    }
  }
  return s;
}

OcpSpec random_quadrotor_task(std::uint64_t seed) {
  OcpSpec s = quadrotor_ocp_defaults();
  Rng rng(seed);
  Vec bound(12);
  bound << 5, 5, 5, 1, 1, 1, kPi, kPi / 2, kPi, 1, 1, 1;
  for (int i = 0; i < 12; ++i) s.x0[i] = rng.uniform(-bound[i], bound[i]);
  for (int i = 0; i < 12; ++i) s.x_target[i] = rng.uniform(-bound[i], bound[i]);
  return s;
}

OcpSpec start_inside_obstacle_task() {
  OcpSpec s = dubins_ocp_defaults();
  s.x0 << -3.0, 0.0, 0.0;
  s.x_target << 3.0, 0.5, 0.0;
  Obstacle o;
  o.center = Eigen::Vector2d(-3.0, 0.0);
  o.radius = 1.0;
  s.obstacles.push_back(o);
  return s;
}

Mat rollout(DynamicsModel model, const Vec& x0, const Mat& controls, double dt) {
  Mat S(controls.rows() + 1, x0.size());
  S.row(0) = x0.transpose();
  for (int t = 0; t < controls.rows(); ++t)
    S.row(t + 1) = euler_step(model, S.row(t).transpose(), controls.row(t).transpose(), dt).transpose();
  return S;
}

SafetyFilterSpec random_safety_filter_task(std::uint64_t seed) {
  SafetyFilterSpec s;
  s.model = DynamicsModel::Dubins;
  s.u_min = Eigen::Vector2d(-10.0, -5.0);
  s.u_max = Eigen::Vector2d(10.0, 5.0);
  Rng rng(seed);
  const Vec3 bound(5.0, 5.0, kPi);
  Vec3 target;
  s.x0 = Vec(3);
  for (int i = 0; i < 3; ++i) s.x0[i] = rng.uniform(-bound[i], bound[i]);
  for (int i = 0; i < 3; ++i) target[i] = rng.uniform(-bound[i], bound[i]);
  const Vec p0 = s.x0.head(2), p1 = target.head(2);
  const double span = (p1 - p0).cwiseAbs().maxCoeff();
  for (int attempt = 0;; ++attempt) {
    if (attempt == 10000) throw SpecError("could not place an obstacle clear of the start");
    Obstacle o;
    const double lambda = rng.uniform();
    o.center = p0 + lambda * (p1 - p0);
    o.radius = rng.uniform(0.01, 2.0) * span;
    if ((p0 - o.center).norm() > o.radius) {
      s.obstacles = {o};
      break;
    }
  }
  // Reference: drive toward the target, ignoring the obstacle.
  s.u_ref = Mat(s.T, 2);
  Vec x = s.x0;
  for (int t = 0; t < s.T; ++t) {
    const Vec dp = target.head(2) - x.head(2);
    const double err = wrap_angle(std::atan2(dp[1], dp[0]) - x[2]);
    Vec u(2);
    u << std::clamp(2.0 * dp.norm() * std::cos(err), s.u_min[0], s.u_max[0]),
        std::clamp(4.0 * err, s.u_min[1], s.u_max[1]);
    s.u_ref.row(t) = u.transpose();
    x = euler_step(s.model, x, u, s.dt);
  }
  return s;
}

TrajectoryLayout layout(const OcpSpec& spec) { return {state_dim(spec.model), control_dim(spec.model), spec.T}; }
TrajectoryLayout layout(const SafetyFilterSpec& spec) {
  return {state_dim(spec.model), control_dim(spec.model), spec.T};
}

NlpSpec build_ocp_nlp(const OcpSpec& spec_in, HessianMode mode) {
  spec_in.validate();
  auto spec = std::make_shared<const OcpSpec>(spec_in);
  const TrajectoryLayout L = layout(*spec);
  const int n_obs = static_cast<int>(spec->obstacles.size());
  const int m_obs = (L.T + 1) * n_obs;

  NlpSpec nlp;
  nlp.n = L.n();
  nlp.m = m_obs + 2 * L.nu * L.T;
  nlp.p = (L.T + 1) * L.nx;
  nlp.name = std::string(model_name(spec->model)) + "_ocp";

  nlp.f = [spec, L](const Vec& z) {
    double f = 0.0;
    for (int t = 0; t <= L.T; ++t) {
      const Vec e = z.segment(L.state(t), L.nx) - spec->x_target;
      f += e.dot((t == L.T ? spec->Q_T : spec->Q) * e);
    }
    for (int t = 0; t < L.T; ++t) {
      const Vec u = z.segment(L.control(t), L.nu);
      f += u.dot(spec->R * u);
    }
    return f;
  };
  nlp.grad_f = [spec, L](const Vec& z) {
    Vec g(L.n());
    for (int t = 0; t <= L.T; ++t)
      g.segment(L.state(t), L.nx) = 2.0 * (t == L.T ? spec->Q_T : spec->Q) * (z.segment(L.state(t), L.nx) - spec->x_target);
    for (int t = 0; t < L.T; ++t) g.segment(L.control(t), L.nu) = 2.0 * spec->R * z.segment(L.control(t), L.nu);
    return g;
  };
  nlp.g = [spec, L, n_obs, m = nlp.m, m_obs](const Vec& z) {
    Vec g(m);
    for (int t = 0; t <= L.T; ++t)
      for (int i = 0; i < n_obs; ++i) {
        const Obstacle& o = spec->obstacles[i];
        g[t * n_obs + i] = o.radius * o.radius - sq_dist(z.segment(L.state(t), L.nx), o);
      }
    control_box_values(L, spec->u_min, spec->u_max, z, g, m_obs);
    return g;
  };
  nlp.jac_g = [spec, L, n_obs, m = nlp.m, m_obs](const Vec& z) {
    std::vector<Triplet> t;
    for (int s = 0; s <= L.T; ++s)
      for (int i = 0; i < n_obs; ++i) {
        const Obstacle& o = spec->obstacles[i];
        const int d = static_cast<int>(o.center.size());
        const Vec diff = z.segment(L.state(s), d) - o.center;
        for (int k = 0; k < d; ++k) t.emplace_back(s * n_obs + i, L.state(s) + k, -2.0 * diff[k]);
      }
    control_box_jacobian(L, t, m_obs);
    return make_csc(m, L.n(), t);
  };
  nlp.h = [spec, L](const Vec& z) { return dynamics_residual(spec->model, L, spec->x0, spec->dt, z); };
  nlp.jac_h = [spec, L](const Vec& z) { return dynamics_jacobian(spec->model, L, spec->dt, z); };
  nlp.hessian = [spec, L, n_obs, mode](const Vec& z, const Vec& y_I, const Vec& y_E) {
    std::vector<Triplet> t;
    for (int s = 0; s <= L.T; ++s) add_block(t, L.state(s), L.state(s), 2.0 * (s == L.T ? spec->Q_T : spec->Q));
    for (int s = 0; s < L.T; ++s) add_block(t, L.control(s), L.control(s), 2.0 * spec->R);
    if (mode == HessianMode::Exact) {
      for (int s = 0; s <= L.T; ++s)
        for (int i = 0; i < n_obs; ++i) {
          const double y = y_I[s * n_obs + i];
          for (int k = 0; k < spec->obstacles[i].center.size(); ++k) t.emplace_back(L.state(s) + k, L.state(s) + k, -2.0 * y);
        }
      add_dynamics_curvature(t, spec->model, L, spec->dt, z, y_E);
    }
    return make_csc(L.n(), L.n(), t);
  };

  Mat S = spec->x0.transpose().replicate(L.T + 1, 1);
  Mat U = Mat::Zero(L.T, L.nu);
  if (spec->model == DynamicsModel::Quadrotor)
    U.col(0).setConstant(std::clamp(QuadrotorConstants{}.mass * QuadrotorConstants{}.gravity, spec->u_min[0], spec->u_max[0]));
  nlp.x0 = L.pack(S, U);
  return nlp;
}

NlpSpec build_safety_filter_nlp(const SafetyFilterSpec& spec_in, HessianMode mode) {
  spec_in.validate();
  auto spec = std::make_shared<const SafetyFilterSpec>(spec_in);
  const TrajectoryLayout L = layout(*spec);
  const int n_obs = static_cast<int>(spec->obstacles.size());
  const int m_cbf = L.T * n_obs;
  const double keep = 1.0 - spec->beta;

  NlpSpec nlp;
  nlp.n = L.n();
  nlp.m = m_cbf + (spec->control_bounds ? 2 * L.nu * L.T : 0);
  nlp.p = (L.T + 1) * L.nx;
  nlp.name = std::string(model_name(spec->model)) + "_safety_filter";

  auto barrier = [spec](const Vec& x, int i) {
    const Obstacle& o = spec->obstacles[i];
    return sq_dist(x, o) - o.radius * o.radius;
  };

  nlp.f = [spec, L](const Vec& z) {
    double f = 0.0;
    for (int t = 0; t < L.T; ++t) f += (z.segment(L.control(t), L.nu) - spec->u_ref.row(t).transpose()).squaredNorm();
    return f;
  };
  nlp.grad_f = [spec, L](const Vec& z) {
    Vec g = Vec::Zero(L.n());
    for (int t = 0; t < L.T; ++t)
      g.segment(L.control(t), L.nu) = 2.0 * (z.segment(L.control(t), L.nu) - spec->u_ref.row(t).transpose());
    return g;
  };
  nlp.g = [spec, L, n_obs, m = nlp.m, m_cbf, keep, barrier](const Vec& z) {
    Vec g(m);
    for (int t = 0; t < L.T; ++t)
      for (int i = 0; i < n_obs; ++i)
        g[t * n_obs + i] = keep * barrier(z.segment(L.state(t), L.nx), i) - barrier(z.segment(L.state(t + 1), L.nx), i);
    if (spec->control_bounds) control_box_values(L, spec->u_min, spec->u_max, z, g, m_cbf);
    return g;
  };
  nlp.jac_g = [spec, L, n_obs, m = nlp.m, m_cbf, keep](const Vec& z) {
    std::vector<Triplet> t;
    for (int s = 0; s < L.T; ++s)
      for (int i = 0; i < n_obs; ++i) {
        const Obstacle& o = spec->obstacles[i];
        const int d = static_cast<int>(o.center.size());
        const Vec d0 = z.segment(L.state(s), d) - o.center;
        const Vec d1 = z.segment(L.state(s + 1), d) - o.center;
        for (int k = 0; k < d; ++k) {
          t.emplace_back(s * n_obs + i, L.state(s) + k, 2.0 * keep * d0[k]);
          t.emplace_back(s * n_obs + i, L.state(s + 1) + k, -2.0 * d1[k]);
        }
      }
    if (spec->control_bounds) control_box_jacobian(L, t, m_cbf);
    return make_csc(m, L.n(), t);
  };
  nlp.h = [spec, L](const Vec& z) { return dynamics_residual(spec->model, L, spec->x0, spec->dt, z); };
  nlp.jac_h = [spec, L](const Vec& z) { return dynamics_jacobian(spec->model, L, spec->dt, z); };
  nlp.hessian = [spec, L, n_obs, keep, mode](const Vec& z, const Vec& y_I, const Vec& y_E) {
    std::vector<Triplet> t;
    for (int s = 0; s < L.T; ++s)
      for (int j = 0; j < L.nu; ++j) t.emplace_back(L.control(s) + j, L.control(s) + j, 2.0);
    if (mode == HessianMode::Exact) {
      for (int s = 0; s < L.T; ++s)
        for (int i = 0; i < n_obs; ++i) {
          const double y = y_I[s * n_obs + i];
          for (int k = 0; k < spec->obstacles[i].center.size(); ++k) {
            t.emplace_back(L.state(s) + k, L.state(s) + k, 2.0 * keep * y);
            t.emplace_back(L.state(s + 1) + k, L.state(s + 1) + k, -2.0 * y);
          }
        }
      add_dynamics_curvature(t, spec->model, L, spec->dt, z, y_E);
    }
    return make_csc(L.n(), L.n(), t);
  };

  nlp.x0 = L.pack(rollout(spec->model, spec->x0, spec->u_ref, spec->dt), spec->u_ref);
  return nlp;
}

// ---------------------------------------------------------------------------
// JSON

std::string task_to_json(const TaskSpec& task, int indent) {
  json j;
  if (const auto* o = std::get_if<OcpSpec>(&task)) {
    j = {{"type", "ocp"},
         {"model", model_name(o->model)},
         {"T", o->T},
         {"dt", o->dt},
         {"Q", mat_to_json(o->Q)},
         {"R", mat_to_json(o->R)},
         {"Q_T", mat_to_json(o->Q_T)},
         {"x0", vec_json(o->x0)},
         {"x_target", vec_json(o->x_target)},
         {"obstacles", obstacles_json(o->obstacles)},
         {"u_min", vec_json(o->u_min)},
         {"u_max", vec_json(o->u_max)}};
  } else {
    const auto& s = std::get<SafetyFilterSpec>(task);
    j = {{"type", "safety_filter"},
         {"model", model_name(s.model)},
         {"T", s.T},
         {"dt", s.dt},
         {"beta", s.beta},
         {"x0", vec_json(s.x0)},
         {"u_ref", mat_to_json(s.u_ref)},
         {"obstacles", obstacles_json(s.obstacles)},
         {"u_min", vec_json(s.u_min)},
         {"u_max", vec_json(s.u_max)},
         {"control_bounds", s.control_bounds}};
  }
  return j.dump(indent);
}

TaskSpec task_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const std::string type = j.at("type").get<std::string>();
    if (type == "ocp") {
      OcpSpec o = parse_model(j.at("model").get<std::string>()) == DynamicsModel::Dubins ? dubins_ocp_defaults()
                                                                                          : quadrotor_ocp_defaults();
      o.T = j.value("T", o.T);
      o.dt = j.value("dt", o.dt);
      if (j.contains("Q")) o.Q = mat_from_json(j["Q"], "Q");
      if (j.contains("R")) o.R = mat_from_json(j["R"], "R");
      if (j.contains("Q_T")) o.Q_T = mat_from_json(j["Q_T"], "Q_T");
      o.x0 = vec_from(j.at("x0"));
      o.x_target = vec_from(j.at("x_target"));
      if (j.contains("obstacles")) o.obstacles = obstacles_from(j["obstacles"]);
      if (j.contains("u_min")) o.u_min = vec_from(j["u_min"]);
      if (j.contains("u_max")) o.u_max = vec_from(j["u_max"]);
      o.validate();
      return o;
    }
    if (type == "safety_filter") {
      SafetyFilterSpec s;
      s.model = parse_model(j.at("model").get<std::string>());
      s.T = j.value("T", s.T);
      s.dt = j.value("dt", s.dt);
      s.beta = j.value("beta", s.beta);
      s.x0 = vec_from(j.at("x0"));
      s.u_ref = mat_from_json(j.at("u_ref"), "u_ref");
      s.obstacles = obstacles_from(j.at("obstacles"));
      const OcpSpec def = s.model == DynamicsModel::Dubins ? dubins_ocp_defaults() : quadrotor_ocp_defaults();
      s.u_min = j.contains("u_min") ? vec_from(j["u_min"]) : def.u_min;
      s.u_max = j.contains("u_max") ? vec_from(j["u_max"]) : def.u_max;
      s.control_bounds = j.value("control_bounds", true);
      s.validate();
      return s;
    }
    throw LoadError("unknown task type '" + type + "'");
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed task file: ") + e.what());
  } catch (const SpecError& e) {
    throw LoadError(std::string("invalid task: ") + e.what());
  }
}

void save_task(const TaskSpec& task, const std::string& path) { write_file(path, task_to_json(task, 2)); }
TaskSpec load_task(const std::string& path) { return task_from_json(read_file(path)); }

TrajectoryLayout layout(const TaskSpec& task) {
  return std::visit([](const auto& s) { return layout(s); }, task);
}

NlpSpec build_nlp(const TaskSpec& task, HessianMode mode) {
  if (const auto* o = std::get_if<OcpSpec>(&task)) return build_ocp_nlp(*o, mode);
  return build_safety_filter_nlp(std::get<SafetyFilterSpec>(task), mode);
}

std::string sqp_result_to_json(const TrajectoryLayout& lay, const SqpResult& r, int indent) {
  json hist = json::array();
  for (const SqpIteration& it : r.history)
    hist.push_back({{"iter", it.iter},
                    {"residual", it.residual.inf_norm()},
                    {"stationarity", it.residual.stationarity},
                    {"primal", it.residual.primal},
                    {"complementarity", it.residual.complementarity},
                    {"step", it.step},
                    {"merit_mu", it.merit_mu},
                    {"merit_before", it.merit_before},
                    {"merit_after", it.merit_after},
                    {"qp_status", to_string(it.qp_status)},
                    {"qp_iterations", it.qp_iterations}});
  json iterates = json::array();
  for (const Vec& z : r.iterates)
    iterates.push_back({{"states", mat_to_json(lay.states(z))}, {"controls", mat_to_json(lay.controls(z))}});
  json j = {{"status", to_string(r.status)},
            {"iterations", r.iterations},
            {"residual", r.residual.inf_norm()},
            {"states", mat_to_json(lay.states(r.x))},
            {"controls", mat_to_json(lay.controls(r.x))},
            {"history", hist},
            {"iterates", iterates}};
  return j.dump(indent);
}

}  // namespace flexqp
