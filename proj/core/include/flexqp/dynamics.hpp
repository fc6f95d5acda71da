#pragma once

#include "flexqp/qp.hpp"

#include <cmath>

namespace flexqp {

enum class DynamicsModel { Dubins, Quadrotor };

const char* model_name(DynamicsModel model);
DynamicsModel parse_model(const std::string& name);
int state_dim(DynamicsModel model);
int control_dim(DynamicsModel model);

struct QuadrotorConstants {
  double mass = 1.0;
  double Ix = 1.0, Iy = 1.0, Iz = 1.0;
  double gravity = 9.81;
};

template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Unicycle: x = (p_x, p_y, theta), u = (v, omega).
template <class S>
VecT<S> dubins_rhs(const VecT<S>& x, const VecT<S>& u) {
  using std::cos;
  using std::sin;
  VecT<S> dx(3);
  dx << u[0] * cos(x[2]), u[0] * sin(x[2]), u[1];
  return dx;
}

/// Rigid body with state (position, velocity, roll/pitch/yaw, body rates)
/// and control (collective thrust F, torques tau_x, tau_y, tau_z). Velocity
/// is expressed in the world frame; the Euler angles use the ZYX convention.
template <class S>
VecT<S> quadrotor_rhs(const VecT<S>& x, const VecT<S>& u, const QuadrotorConstants& c = {}) {
  using std::cos;
  using std::sin;
  using std::tan;
  const S phi = x[6], theta = x[7], psi = x[8];
  const S p = x[9], q = x[10], r = x[11];
  const S cphi = cos(phi), sphi = sin(phi);
  const S cth = cos(theta), sth = sin(theta), tth = tan(theta);
  const S cpsi = cos(psi), spsi = sin(psi);
  const S acc = u[0] / c.mass;

  VecT<S> dx(12);
  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  dx[3] = acc * (cphi * sth * cpsi + sphi * spsi);
  dx[4] = acc * (cphi * sth * spsi - sphi * cpsi);
  dx[5] = acc * (cphi * cth) - c.gravity;
  dx[6] = p + q * sphi * tth + r * cphi * tth;
  dx[7] = q * cphi - r * sphi;
  dx[8] = (q * sphi + r * cphi) / cth;
  dx[9] = ((c.Iy - c.Iz) * q * r + u[1]) / c.Ix;
  dx[10] = ((c.Iz - c.Ix) * p * r + u[2]) / c.Iy;
  dx[11] = ((c.Ix - c.Iy) * p * q + u[3]) / c.Iz;
  return dx;
}

template <class S>
VecT<S> model_rhs(DynamicsModel model, const VecT<S>& x, const VecT<S>& u) {
  return model == DynamicsModel::Dubins ? dubins_rhs<S>(x, u) : quadrotor_rhs<S>(x, u);
}

Vec dubins_dynamics(const Vec& x, const Vec& u);
Vec quadrotor_dynamics(const Vec& x, const Vec& u);
Vec dynamics(DynamicsModel model, const Vec& x, const Vec& u);

/// x + f(x, u) dt.
Vec euler_step(DynamicsModel model, const Vec& x, const Vec& u, double dt);

struct StepJacobians {
  Mat fx;  // d x_{t+1} / d x_t
  Mat fu;  // d x_{t+1} / d u_t
};

/// Exact Jacobians of euler_step by forward-mode automatic differentiation.
StepJacobians euler_step_jacobians(DynamicsModel model, const Vec& x, const Vec& u, double dt);

/// Hessian of w' euler_step(x, u) with respect to (x, u), as a dense
/// (nx + nu) square matrix. Built from central differences of the exact
/// Jacobians (step 1e-6).
Mat euler_step_weighted_hessian(DynamicsModel model, const Vec& x, const Vec& u, double dt, const Vec& w);

}  // namespace flexqp
