#pragma once

#include "flexqp/dynamics.hpp"
#include "flexqp/sqp.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace flexqp {

/// Circle (Dubins) or ball (quadrotor) over the leading position components.
struct Obstacle {
  Vec center;
  double radius = 1.0;
};

enum class HessianMode {
  GaussNewton,  // cost Hessian only
  Exact,        // plus constraint curvature weighted by the multipliers
};

/// Trajectory optimization over x_0..x_T, u_0..u_{T-1} with Euler-discretized
/// dynamics, tracking cost (x - x_target)'Q(x - x_target) + u'Ru and terminal
/// weight Q_T, obstacle keep-out constraints and control boxes.
struct OcpSpec {
  DynamicsModel model = DynamicsModel::Dubins;
  int T = 50;
  double dt = 0.033;
  Mat Q, R, Q_T;
  Vec x0, x_target;
  std::vector<Obstacle> obstacles;
  Vec u_min, u_max;

  void validate() const;
};

/// Reference controls u_ref (T x nu) are filtered through the discrete
/// barrier condition (1 - beta) b(x_t) - b(x_{t+1}) <= 0 with
/// b(x) = |p - c|^2 - r^2 for every obstacle.
struct SafetyFilterSpec {
  DynamicsModel model = DynamicsModel::Dubins;
  int T = 50;
  double dt = 0.05;
  double beta = 0.1;
  Vec x0;
  Mat u_ref;
  std::vector<Obstacle> obstacles;
  Vec u_min, u_max;
  /// false reproduces the inequality count without control bounds.
  bool control_bounds = true;

  void validate() const;
};

/// Index bookkeeping for the stacked decision vector (states first).
struct TrajectoryLayout {
  int nx = 0, nu = 0, T = 0;
  int n() const { return (T + 1) * nx + T * nu; }
  int state(int t) const { return t * nx; }
  int control(int t) const { return (T + 1) * nx + t * nu; }
  Mat states(const Vec& z) const;    // (T+1) x nx
  Mat controls(const Vec& z) const;  // T x nu
  Vec pack(const Mat& states, const Mat& controls) const;
};

OcpSpec dubins_ocp_defaults();
OcpSpec quadrotor_ocp_defaults();

/// Start and target uniform in +-(5, 5, pi); five obstacles with centers in
/// the box spanned by the two positions and radii uniform in
/// [0.01 d, 0.2 d], d = |x_target - x0|. Obstacles that contain the start
/// or target position are redrawn.
OcpSpec random_dubins_task(std::uint64_t seed);
/// Start and target uniform in +-(5, 5, 5, 1, 1, 1, pi, pi/2, pi, 1, 1, 1).
OcpSpec random_quadrotor_task(std::uint64_t seed);
/// Dubins task whose single obstacle covers the start position.
OcpSpec start_inside_obstacle_task();

/// One obstacle between start and target with radius
/// U(0.01, 2) * max(|dp_x|, |dp_y|) (redrawn while it contains the start),
/// and a reference from a clamped heading controller aimed at the target.
SafetyFilterSpec random_safety_filter_task(std::uint64_t seed);

TrajectoryLayout layout(const OcpSpec& spec);
TrajectoryLayout layout(const SafetyFilterSpec& spec);

/// Initial guess: states held at x0, controls zero (hover thrust for the
/// quadrotor).
NlpSpec build_ocp_nlp(const OcpSpec& spec, HessianMode mode = HessianMode::GaussNewton);
/// Initial guess: rollout of u_ref from x0.
NlpSpec build_safety_filter_nlp(const SafetyFilterSpec& spec, HessianMode mode = HessianMode::GaussNewton);

/// States from x0 under a control sequence (T x nu).
Mat rollout(DynamicsModel model, const Vec& x0, const Mat& controls, double dt);

using TaskSpec = std::variant<OcpSpec, SafetyFilterSpec>;

std::string task_to_json(const TaskSpec& task, int indent = -1);
TaskSpec task_from_json(const std::string& text);
void save_task(const TaskSpec& task, const std::string& path);
TaskSpec load_task(const std::string& path);

TrajectoryLayout layout(const TaskSpec& task);
NlpSpec build_nlp(const TaskSpec& task, HessianMode mode = HessianMode::GaussNewton);

/// Status, per-iteration history and (when recorded) the states/controls
/// of every iterate.
std::string sqp_result_to_json(const TrajectoryLayout& lay, const SqpResult& result, int indent = -1);

}  // namespace flexqp
