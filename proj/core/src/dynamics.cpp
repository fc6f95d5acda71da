#include "flexqp/dynamics.hpp"

#include "flexqp/error.hpp"

#include <unsupported/Eigen/AutoDiff>

namespace flexqp {

const char* model_name(DynamicsModel model) { return model == DynamicsModel::Dubins ? "dubins" : "quadrotor"; }

DynamicsModel parse_model(const std::string& name) {
  if (name == "dubins" || name == "Dubins") return DynamicsModel::Dubins;
  if (name == "quadrotor" || name == "Quadrotor") return DynamicsModel::Quadrotor;
  throw SpecError("unknown dynamics model '" + name + "'");
}

int state_dim(DynamicsModel model) { return model == DynamicsModel::Dubins ? 3 : 12; }
int control_dim(DynamicsModel model) { return model == DynamicsModel::Dubins ? 2 : 4; }

namespace {

void check_sizes(DynamicsModel model, const Vec& x, const Vec& u) {
  if (x.size() != state_dim(model) || u.size() != control_dim(model))
    throw ArgumentError(std::string(model_name(model)) + " dynamics: wrong state or control size");
}

}  // namespace

Vec dubins_dynamics(const Vec& x, const Vec& u) {
  check_sizes(DynamicsModel::Dubins, x, u);
  return dubins_rhs<double>(x, u);
}

Vec quadrotor_dynamics(const Vec& x, const Vec& u) {
  check_sizes(DynamicsModel::Quadrotor, x, u);
  return quadrotor_rhs<double>(x, u);
}

Vec dynamics(DynamicsModel model, const Vec& x, const Vec& u) {
  check_sizes(model, x, u);
  return model_rhs<double>(model, x, u);
}

Vec euler_step(DynamicsModel model, const Vec& x, const Vec& u, double dt) {
  return x + dynamics(model, x, u) * dt;
}

StepJacobians euler_step_jacobians(DynamicsModel model, const Vec& x, const Vec& u, double dt) {
  check_sizes(model, x, u);
  using AD = Eigen::AutoDiffScalar<Vec>;
  const int nx = static_cast<int>(x.size()), nu = static_cast<int>(u.size()), nz = nx + nu;
  VecT<AD> xa(nx), ua(nu);
  for (int i = 0; i < nx; ++i) xa[i] = AD(x[i], nz, i);
  for (int j = 0; j < nu; ++j) ua[j] = AD(u[j], nz, nx + j);
  const VecT<AD> f = model_rhs<AD>(model, xa, ua);
  StepJacobians J;
  J.fx = Mat::Identity(nx, nx);
  J.fu = Mat::Zero(nx, nu);
  for (int i = 0; i < nx; ++i) {
    const Vec& d = f[i].derivatives();
    if (d.size() == 0) continue;  // constant component
    J.fx.row(i) += dt * d.head(nx).transpose();
    J.fu.row(i) = dt * d.tail(nu).transpose();
  }
  return J;
}

Mat euler_step_weighted_hessian(DynamicsModel model, const Vec& x, const Vec& u, double dt, const Vec& w) {
  const int nx = static_cast<int>(x.size()), nu = static_cast<int>(u.size()), nz = nx + nu;
  if (w.size() != nx) throw ArgumentError("weight vector must have the state dimension");
  const double h = 1e-6;
  Mat H(nz, nz);
  for (int k = 0; k < nz; ++k) {
    Vec xp = x, xm = x, up = u, um = u;
    if (k < nx) {
      xp[k] += h;
      xm[k] -= h;
    } else {
      up[k - nx] += h;
      um[k - nx] -= h;
    }
    const StepJacobians Jp = euler_step_jacobians(model, xp, up, dt);
    const StepJacobians Jm = euler_step_jacobians(model, xm, um, dt);
    Vec gp(nz), gm(nz);
    gp << Jp.fx.transpose() * w, Jp.fu.transpose() * w;
    gm << Jm.fx.transpose() * w, Jm.fu.transpose() * w;
    H.col(k) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace flexqp
