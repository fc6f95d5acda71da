#include "flexqp/error.hpp"
#include "flexqp/oracle.hpp"
#include "flexqp/probgen.hpp"
#include "flexqp/tasks.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flexqp;
using namespace flexqp::test;

namespace {

template <class F>
Mat central_jacobian(F f, const Vec& x, double h = 1e-6) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

double max_rel_err(const Mat& got, const Mat& ref) {
  double worst = 0.0;
  for (int i = 0; i < ref.rows(); ++i)
    for (int j = 0; j < ref.cols(); ++j)
      worst = std::max(worst, std::abs(got(i, j) - ref(i, j)) / std::max(1.0, std::abs(ref(i, j))));
  return worst;
}

Vec random_state(DynamicsModel model, std::mt19937_64& g) {
  Vec x = randn(g, state_dim(model));
  if (model == DynamicsModel::Quadrotor) x[7] = 0.5 * std::tanh(x[7]);  // keep pitch away from +-pi/2
  return x;
}

NlpSpec rosenbrock() {
  NlpSpec nlp;
  nlp.n = 2;
  nlp.f = [](const Vec& x) { return std::pow(1.0 - x[0], 2) + 100.0 * std::pow(x[1] - x[0] * x[0], 2); };
  nlp.grad_f = [](const Vec& x) {
    Vec g(2);
    g << -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]), 200.0 * (x[1] - x[0] * x[0]);
    return g;
  };
  nlp.g = nlp.h = [](const Vec&) { return Vec(0); };
  nlp.jac_g = nlp.jac_h = [](const Vec&) { return SpMat(0, 2); };
  nlp.hessian = [](const Vec& x, const Vec&, const Vec&) {
    Mat H(2, 2);
    H << 1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0, -400.0 * x[0], -400.0 * x[0], 200.0;
    return sparse_from_dense(H);
  };
  nlp.x0 = Eigen::Vector2d(-1.2, 1.0);
  nlp.name = "rosenbrock";
  return nlp;
}

/// A Dubins filter whose reference drives straight along +x, far from the
/// single obstacle, inside the control box.
SafetyFilterSpec safe_reference_filter() {
  SafetyFilterSpec s;
  s.T = 10;
  s.x0 = Vec::Zero(3);
  s.u_ref = Mat(10, 2);
  for (int t = 0; t < 10; ++t) s.u_ref.row(t) << 1.0, 0.1 * std::sin(t);
  s.obstacles = {Obstacle{Eigen::Vector2d(0.0, 10.0), 1.0}};
  s.u_min = Eigen::Vector2d(-10.0, -5.0);
  s.u_max = Eigen::Vector2d(10.0, 5.0);
  return s;
}

}  // namespace

TEST(Dynamics, Examples) {
  Vec x(3), u(2);
  x << 0.3, -0.2, 0.0;
  u << 1.0, 0.0;
  EXPECT_LE((dubins_dynamics(x, u) - Eigen::Vector3d(1.0, 0.0, 0.0)).lpNorm<Eigen::Infinity>(), 1e-15);

  Vec hover_u(4);
  hover_u << 9.81, 0.0, 0.0, 0.0;
  Vec hover_x = Vec::Zero(12);
  hover_x.head(3) << 1.0, 2.0, 3.0;
  EXPECT_LE(quadrotor_dynamics(hover_x, hover_u).lpNorm<Eigen::Infinity>(), 1e-15);

  Vec step = euler_step(DynamicsModel::Dubins, x, u, 0.1);
  EXPECT_NEAR(step[0], 0.4, 1e-15);
  EXPECT_EQ(state_dim(DynamicsModel::Quadrotor), 12);
  EXPECT_EQ(control_dim(DynamicsModel::Quadrotor), 4);
  EXPECT_EQ(parse_model(model_name(DynamicsModel::Quadrotor)), DynamicsModel::Quadrotor);
}

TEST(Dynamics, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 g(1);
  for (DynamicsModel model : {DynamicsModel::Dubins, DynamicsModel::Quadrotor}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = random_state(model, g), u = randn(g, control_dim(model));
      const double dt = 0.05;
      const StepJacobians J = euler_step_jacobians(model, x, u, dt);
      const Mat fx = central_jacobian([&](const Vec& xx) { return euler_step(model, xx, u, dt); }, x);
      const Mat fu = central_jacobian([&](const Vec& uu) { return euler_step(model, x, uu, dt); }, u);
      EXPECT_LE(max_rel_err(J.fx, fx), 1e-5) << model_name(model);
      EXPECT_LE(max_rel_err(J.fu, fu), 1e-5) << model_name(model);
    }
  }
}

TEST(Dynamics, WeightedHessianMatchesSecondDifferences) {
  std::mt19937_64 g(2);
  for (DynamicsModel model : {DynamicsModel::Dubins, DynamicsModel::Quadrotor}) {
    const int nx = state_dim(model), nu = control_dim(model);
    const Vec x = random_state(model, g), u = randn(g, nu), w = randn(g, nx);
    const Mat H = euler_step_weighted_hessian(model, x, u, 0.05, w);
    ASSERT_EQ(H.rows(), nx + nu);
    auto phi = [&](const Vec& v) { return w.dot(euler_step(model, v.head(nx), v.tail(nu), 0.05)); };
    Vec v(nx + nu);
    v << x, u;
    const double h = 1e-4;
    Mat ref(nx + nu, nx + nu);
    for (int i = 0; i < nx + nu; ++i)
      for (int j = 0; j < nx + nu; ++j) {
        Vec pp = v, pm = v, mp = v, mm = v;
        pp[i] += h, pp[j] += h;
        pm[i] += h, pm[j] -= h;
        mp[i] -= h, mp[j] += h;
        mm[i] -= h, mm[j] -= h;
        ref(i, j) = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4.0 * h * h);
      }
    EXPECT_LE(max_rel_err(H, ref), 1e-4) << model_name(model);
    EXPECT_LE((H - H.transpose()).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Tasks, NlpJacobiansMatchFiniteDifferences) {
  std::mt19937_64 g(3);
  const std::vector<TaskSpec> tasks = {random_dubins_task(4), random_quadrotor_task(4), random_safety_filter_task(4)};
  for (const TaskSpec& task : tasks) {
    const NlpSpec nlp = build_nlp(task);
    const Vec x = nlp.x0 + 0.1 * randn(g, nlp.n);
    const Mat Jg = Mat(nlp.jac_g(x)), Jh = Mat(nlp.jac_h(x));
    EXPECT_LE(max_rel_err(Jg, central_jacobian(nlp.g, x)), 1e-5) << nlp.name;
    EXPECT_LE(max_rel_err(Jh, central_jacobian(nlp.h, x)), 1e-5) << nlp.name;
    EXPECT_LE(max_rel_err(nlp.grad_f(x).transpose(),
                          central_jacobian([&](const Vec& z) { return Vec::Constant(1, nlp.f(z)); }, x)),
              1e-5)
        << nlp.name;
  }
}

TEST(Tasks, SubproblemDimensionsMatchTheTable) {
  auto dims = [](const TaskSpec& task) {
    const NlpSpec nlp = build_nlp(task);
    const QpProblem qp = build_subproblem(nlp, nlp.x0, Vec::Zero(nlp.m), Vec::Zero(nlp.p));
    return Dims{qp.n(), qp.m(), qp.p()};
  };
  EXPECT_EQ(dims(random_dubins_task(0)), (Dims{253, 455, 153}));
  EXPECT_EQ(dims(random_quadrotor_task(0)), (Dims{812, 400, 612}));
  SafetyFilterSpec sf = random_safety_filter_task(0);
  EXPECT_EQ(dims(sf), (Dims{253, 250, 153}));
  sf.control_bounds = false;
  EXPECT_EQ(dims(sf), (Dims{253, 50, 153}));
}

TEST(Tasks, OneBarrierRowPerStepAndObstacle) {
  SafetyFilterSpec s = safe_reference_filter();
  s.control_bounds = false;
  EXPECT_EQ(build_nlp(s).m, s.T);
  s.obstacles.push_back(Obstacle{Eigen::Vector2d(5.0, 5.0), 0.5});
  EXPECT_EQ(build_nlp(s).m, 2 * s.T);
}

TEST(Tasks, RolloutAndLayout) {
  const OcpSpec spec = random_dubins_task(1);
  const TrajectoryLayout lay = layout(spec);
  std::mt19937_64 g(4);
  const Mat U = randn(g, spec.T, 2);
  const Mat X = rollout(spec.model, spec.x0, U, spec.dt);
  ASSERT_EQ(X.rows(), spec.T + 1);
  for (int t = 0; t < spec.T; ++t)
    EXPECT_LE((X.row(t + 1).transpose() -
               euler_step(spec.model, X.row(t).transpose(), U.row(t).transpose(), spec.dt))
                  .lpNorm<Eigen::Infinity>(),
              1e-15);
  const Vec z = lay.pack(X, U);
  EXPECT_EQ(lay.states(z), X);
  EXPECT_EQ(lay.controls(z), U);
  // a rollout satisfies the dynamics equalities exactly
  EXPECT_LE(build_nlp(spec).h(z).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Tasks, JsonRoundTrip) {
  const std::vector<TaskSpec> tasks = {random_dubins_task(2), random_quadrotor_task(2), random_safety_filter_task(2),
                                       start_inside_obstacle_task()};
  for (const TaskSpec& t : tasks) {
    const std::string text = task_to_json(t);
    EXPECT_EQ(task_to_json(task_from_json(text)), text);
  }
  EXPECT_THROW(task_from_json("{\"kind\": \"nope\"}"), LoadError);
}

TEST(Tasks, RandomTasksKeepObstaclesClearOfEndpoints) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const OcpSpec s = random_dubins_task(seed);
    ASSERT_EQ(s.obstacles.size(), 5u);
    for (const Obstacle& o : s.obstacles) {
      EXPECT_GT((s.x0.head(2) - o.center).norm(), o.radius);
      EXPECT_GT((s.x_target.head(2) - o.center).norm(), o.radius);
    }
  }
}

TEST(Subproblem, QuadraticNlpReproducesTheQp) {
  const QpProblem prob = random_qp(5, 6, 4, 2);
  std::mt19937_64 g(5);
  const Vec x = randn(g, 6);
  const NlpSpec nlp = nlp_from_qp(prob, x);
  const QpProblem sub = build_subproblem(nlp, x, randn(g, 4), randn(g, 2));
  const Mat P = Mat(mirror_upper(prob.P()));
  EXPECT_LE((Mat(mirror_upper(sub.P())) - P).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_LE((sub.q() - (P * x + prob.q())).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE((Mat(sub.G()) - Mat(prob.G())).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_LE((sub.h() - (prob.h() - prob.G() * x)).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE((sub.b() - (prob.b() - prob.A() * x)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Subproblem, IndefiniteHessianIsShifted) {
  Mat H(2, 2);
  H << 1.0, 0.0, 0.0, -3.0;
  const double tau = psd_shift(sparse_from_dense(H));
  EXPECT_GE(tau, 3.0);
  EXPECT_LE(tau, 30.0);
  EXPECT_EQ(psd_shift(sparse_from_dense(Mat::Identity(2, 2))), 0.0);
}

TEST(Subproblem, NonFiniteEvaluatorIsNamed) {
  NlpSpec nlp = rosenbrock();
  nlp.grad_f = [](const Vec&) { return Vec::Constant(2, std::numeric_limits<double>::quiet_NaN()); };
  try {
    evaluate(nlp, nlp.x0);
    FAIL() << "expected SqpError";
  } catch (const SqpError& e) {
    EXPECT_NE(std::string(e.what()).find("grad_f"), std::string::npos) << e.what();
  }
}

TEST(Sqp, ConvexQpConvergesInOneIteration) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const QpProblem prob = random_qp(seed, 8, 6, 2);
    const QpSolution star = oracle_solve(prob);
    SqpSettings s;
    s.qp.eps_abs = 1e-7;
    s.qp.policy = std::make_shared<ParamPolicy>(ParamPolicy::adaptive());
    const SqpResult r = sqp_solve(nlp_from_qp(prob, Vec::Zero(8)), s);
    EXPECT_EQ(r.status, SqpStatus::Converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_LE((r.x - star.x).lpNorm<Eigen::Infinity>(), 1e-4);
  }
}

TEST(Sqp, Rosenbrock) {
  const SqpResult r = sqp_solve(rosenbrock());
  EXPECT_EQ(r.status, SqpStatus::Converged);
  EXPECT_LE(r.iterations, 50);
  EXPECT_LE(r.residual.inf_norm(), 1e-2);
  EXPECT_LE((r.x - Eigen::Vector2d(1.0, 1.0)).lpNorm<Eigen::Infinity>(), 1e-2);
  for (const SqpIteration& it : r.history)
    if (it.step > 0.0) EXPECT_LT(it.merit_after, it.merit_before + 1e-12);
}

TEST(Sqp, SafeReferenceIsReturnedUnchanged) {
  const SafetyFilterSpec s = safe_reference_filter();
  const SqpResult r = sqp_solve(build_nlp(s));
  EXPECT_EQ(r.status, SqpStatus::Converged);
  EXPECT_LE((layout(s).controls(r.x) - s.u_ref).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Sqp, StartInsideObstacleDoesNotAbort) {
  SqpSettings s;
  s.max_iter = 2;
  SqpResult r;
  ASSERT_NO_THROW(r = sqp_solve(build_nlp(start_inside_obstacle_task()), s));
  ASSERT_FALSE(r.history.empty());
  EXPECT_EQ(r.history.front().qp_status, SolveStatus::SolvedInfeasibleOriginal);
  EXPECT_TRUE(r.x.allFinite());
}

TEST(Sqp, AcceptedStepsDecreaseTheMerit) {
  SqpSettings s;
  s.max_iter = 4;
  const SqpResult r = sqp_solve(build_nlp(random_dubins_task(3)), s);
  ASSERT_FALSE(r.history.empty());
  for (const SqpIteration& it : r.history) {
    if (it.step > 0.0)
      EXPECT_LT(it.merit_after, it.merit_before + 1e-12) << "iteration " << it.iter;
    else
      EXPECT_EQ(it.merit_after, it.merit_before);
  }
  const std::string json = sqp_result_to_json(layout(random_dubins_task(3)), r);
  EXPECT_NE(json.find("\"history\""), std::string::npos);
}

TEST(Sqp, RejectsBadSettings) {
  SqpSettings s;
  s.eps = 0.0;
  EXPECT_THROW(sqp_solve(rosenbrock(), s), ParameterError);
  NlpSpec broken = rosenbrock();
  broken.x0 = Vec::Zero(3);
  EXPECT_THROW(sqp_solve(broken), ArgumentError);
}
