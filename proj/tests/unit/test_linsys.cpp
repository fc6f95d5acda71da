#include "flexqp/error.hpp"
#include "flexqp/linsys.hpp"
#include "flexqp/solver.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

using namespace flexqp;
using namespace flexqp::test;

namespace {

Mat full_from_upper(const SpMat& U) {
  const Mat D(U);
  return D + D.transpose() - Mat(D.diagonal().asDiagonal());
}

SolverParams random_params(std::mt19937_64& g, int m, int p) {
  std::uniform_real_distribution<double> U(0.05, 20.0);
  SolverParams s = SolverParams::defaults(m, p);
  for (int i = 0; i < m; ++i) {
    s.sigma_s[i] = U(g);
    s.rho_I[i] = U(g);
  }
  for (int i = 0; i < p; ++i) s.rho_E[i] = U(g);
  s.sigma_x = 1e-3;
  return s;
}

SolverState random_state(std::mt19937_64& g, const QpProblem& prob) {
  SolverState st = SolverState::cold_start(prob);
  st.x = randn(g, prob.n());
  st.s = randn(g, prob.m()).cwiseAbs();
  st.w_s = -randn(g, prob.m()).cwiseAbs();
  st.z_I = randn(g, prob.m());
  st.y_I = randn(g, prob.m());
  st.z_E = randn(g, prob.p());
  st.y_E = randn(g, prob.p());
  return st;
}

}  // namespace

TEST(AssembleKkt, HandExamples) {
  const QpProblem one = dense_qp(Mat::Constant(1, 1, 2.0), Vec::Zero(1), empty_rows(1), Vec(0), empty_rows(1),
                                 Vec(0));
  const SpMat K1 = assemble_kkt(one, SolverParams::defaults(0, 0));
  ASSERT_EQ(K1.rows(), 1);
  EXPECT_DOUBLE_EQ(K1.coeff(0, 0), 2.0 + 1e-6);

  const QpProblem row = dense_qp(Mat::Identity(1, 1), Vec::Zero(1), Mat::Ones(1, 1), Vec::Zero(1),
                                 empty_rows(1), Vec(0));
  ScalarParams sp;
  sp.sigma_s = sp.rho_I = 1.0;
  const SpMat K2 = assemble_kkt(row, SolverParams::broadcast(1, 0, sp));
  EXPECT_DOUBLE_EQ(K2.coeff(1, 1), -2.0);
}

TEST(AssembleKkt, MatchesBlockwiseDenseAssembly) {
  std::mt19937_64 g(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const QpProblem prob = random_qp(seed, 4, 3, 2);
    const SolverParams s = random_params(g, 3, 2);
    Mat K = Mat::Zero(9, 9);
    K.topLeftCorner(4, 4) = prob.P_dense() + s.sigma_x * Mat::Identity(4, 4);
    K.block(4, 0, 3, 4) = Mat(prob.G());
    K.block(0, 4, 4, 3) = Mat(prob.G()).transpose();
    K.block(7, 0, 2, 4) = Mat(prob.A());
    K.block(0, 7, 4, 2) = Mat(prob.A()).transpose();
    for (int i = 0; i < 3; ++i) K(4 + i, 4 + i) = -(1.0 / s.sigma_s[i] + 1.0 / s.rho_I[i]);
    for (int i = 0; i < 2; ++i) K(7 + i, 7 + i) = -1.0 / s.rho_E[i];
    const Mat got = mirror_upper(assemble_kkt(prob, s));
    const Vec v = randn(g, 9);
    EXPECT_LE((got * v - K * v).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Factorization, HandExamples) {
  const SpMat I = make_csc(3, 3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}});
  const KktFactorization fi = KktFactorization::factor(I);
  Vec rhs(3);
  rhs << 1.0, -2.0, 3.0;
  EXPECT_EQ(fi.solve(rhs), rhs);

  const SpMat D = make_csc(2, 2, {{0, 0, 2.0}, {1, 1, -1.0}});
  Vec r2(2);
  r2 << 4.0, 3.0;
  const Block1Solution s = solve_direct(KktFactorization::factor(D), r2, 1, 1, 0);
  EXPECT_DOUBLE_EQ(s.x_tilde[0], 2.0);
  EXPECT_DOUBLE_EQ(s.nu_I[0], -3.0);

  EXPECT_THROW(KktFactorization::factor(make_csc(2, 2, {{0, 0, 1.0}, {1, 1, 0.0}})), FactorizationError);
}

TEST(Factorization, ReconstructsPermutedMatrix) {
  std::mt19937_64 g(8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const QpProblem prob = random_qp(seed, 12, 9, 4);
    const SpMat K = assemble_kkt(prob, random_params(g, 9, 4));
    const KktFactorization f = KktFactorization::factor(K);
    const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> Pm(f.permutation());
    const Mat full = full_from_upper(K);
    const Mat permuted = Pm * full * Pm.transpose();
    const Mat L(f.L());
    const Mat rebuilt = L * f.D().asDiagonal() * L.transpose();
    EXPECT_LE((rebuilt - permuted).norm() / permuted.norm(), 1e-10);
  }
}

TEST(Factorization, SolveMatchesDenseLu) {
  std::mt19937_64 g(1);
  const QpProblem prob = random_qp(17, 6, 5, 2);
  const SolverParams s = random_params(g, 5, 2);
  const SpMat K = assemble_kkt(prob, s);
  const KktFactorization f = KktFactorization::factor(K);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec rhs = randn(g, 13);
    const Vec expect = Eigen::FullPivLU<Mat>(full_from_upper(K)).solve(rhs);
    const Block1Solution got = solve_direct(f, rhs, 6, 5, 2);
    Vec stacked(13);
    stacked << got.x_tilde, got.nu_I, got.nu_E;
    EXPECT_LE((stacked - expect).lpNorm<Eigen::Infinity>(), 1e-10);
  }
  EXPECT_THROW(solve_direct(f, Vec::Zero(13), 6, 4, 2), ArgumentError);
}

TEST(Factorization, RefactorKeepsPatternAndMatchesFreshFactor) {
  std::mt19937_64 g(2);
  const QpProblem prob = random_qp(4, 8, 6, 2);
  KktFactorization f = KktFactorization::factor(assemble_kkt(prob, random_params(g, 6, 2)));
  const SpMat K2 = assemble_kkt(prob, random_params(g, 6, 2));
  f.refactor(K2);
  const Vec rhs = randn(g, 16);
  EXPECT_LE((f.solve(rhs) - KktFactorization::factor(K2).solve(rhs)).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(RecoverBlock1, HandExamples) {
  const QpProblem prob = dense_qp(Mat::Identity(1, 1), Vec::Zero(1), Mat::Ones(1, 1), Vec::Zero(1),
                                  empty_rows(1), Vec(0));
  SolverState st = SolverState::cold_start(prob);
  st.s[0] = 1.0;
  SolverParams params = SolverParams::defaults(1, 0);
  EXPECT_DOUBLE_EQ(recover_block1(st, params, Vec::Zero(1), Vec(0)).s_tilde[0], 1.0);

  params.sigma_s[0] = 2.0;
  st.w_s[0] = 4.0;
  EXPECT_DOUBLE_EQ(recover_block1(st, params, Vec::Constant(1, 2.0), Vec(0)).s_tilde[0], -2.0);
}

TEST(RecoverBlock1, RecoveredPointSatisfiesSplitConstraints) {
  std::mt19937_64 g(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const QpProblem prob = random_qp(seed, 7, 5, 3);
    const SolverParams params = random_params(g, 5, 3);
    const SolverState st = random_state(g, prob);
    const KktFactorization f = KktFactorization::factor(assemble_kkt(prob, params));
    const Block1Solution b1 = solve_direct(f, kkt_rhs(prob, params, st), 7, 5, 3);
    const Block1Recovery rec = recover_block1(st, params, b1.nu_I, b1.nu_E);
    const Vec cI = prob.G() * b1.x_tilde + rec.s_tilde - prob.h() - rec.z_I_tilde;
    const Vec cE = prob.A() * b1.x_tilde - prob.b() - rec.z_E_tilde;
    EXPECT_LE(cI.lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE(cE.lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(SolveIndirect, UnconstrainedIdentity) {
  std::mt19937_64 g(6);
  const Vec q = randn(g, 4);
  const QpProblem prob = dense_qp(Mat::Identity(4, 4), q, empty_rows(4), Vec(0), empty_rows(4), Vec(0));
  CgConfig cfg;
  cfg.tol = 1e-14;
  const IndirectSolution s = solve_indirect(prob, SolverParams::defaults(0, 0), SolverState::cold_start(prob), cfg);
  EXPECT_TRUE(s.converged);
  EXPECT_LE((s.x_tilde - (-q / (1.0 + 1e-6))).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_EQ(s.nu_I.size(), 0);
  EXPECT_EQ(s.nu_E.size(), 0);
}

TEST(SolveIndirect, TightToleranceAgreesWithDirect) {
  std::mt19937_64 g(10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const QpProblem prob = random_qp(seed, 8, 6, 2);
    const SolverParams params = random_params(g, 6, 2);
    const SolverState st = random_state(g, prob);
    CgConfig cfg;
    cfg.tol = 1e-12;
    const IndirectSolution ind = solve_indirect(prob, params, st, cfg);
    const Block1Solution dir =
        solve_direct(KktFactorization::factor(assemble_kkt(prob, params)), kkt_rhs(prob, params, st), 8, 6, 2);
    EXPECT_LE((ind.x_tilde - dir.x_tilde).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE((ind.nu_I - dir.nu_I).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE((ind.nu_E - dir.nu_E).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(SolveIndirect, JacobiPreconditionerReachesSameSolution) {
  std::mt19937_64 g(12);
  const QpProblem prob = random_qp(3, 10, 7, 3);
  const SolverParams params = random_params(g, 7, 3);
  const SolverState st = random_state(g, prob);
  CgConfig plain, jacobi;
  plain.tol = jacobi.tol = 1e-12;
  jacobi.preconditioner = Preconditioner::Jacobi;
  const IndirectSolution a = solve_indirect(prob, params, st, plain);
  const IndirectSolution b = solve_indirect(prob, params, st, jacobi);
  EXPECT_LE((a.x_tilde - b.x_tilde).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_THROW(CgConfig({0.0, 0, Preconditioner::None}).validate(), ParameterError);
}

TEST(ShouldRefactor, Band) {
  SolverParams a = SolverParams::defaults(2, 1);
  a.rho_I.setOnes();
  EXPECT_FALSE(should_refactor(a, a));
  SolverParams b = a;
  b.rho_I[1] = 5.01;
  EXPECT_TRUE(should_refactor(a, b));
  b.rho_I[1] = 4.99;
  EXPECT_FALSE(should_refactor(a, b));
  b.rho_I[1] = 1.0 / 5.01;
  EXPECT_TRUE(should_refactor(a, b));
  // mu and alpha do not enter the matrix
  b = a;
  b.mu_I *= 100.0;
  b.alpha = 1.0;
  EXPECT_FALSE(should_refactor(a, b));
}

TEST(Block1Solver, KeepsFactoredParametersInsideBand) {
  const QpProblem prob = random_qp(1, 5, 4, 1);
  Block1Solver solver(prob, LinearMethod::Direct);
  SolverParams p0 = SolverParams::defaults(4, 1);
  const SolverParams used0 = solver.accept(p0);
  EXPECT_EQ(solver.factorizations(), 1);
  SolverParams p1 = p0;
  p1.rho_I *= 3.0;
  p1.mu_I *= 7.0;
  const SolverParams used1 = solver.accept(p1);
  EXPECT_EQ(solver.factorizations(), 1);
  EXPECT_EQ(used1.rho_I, used0.rho_I);
  EXPECT_EQ(used1.mu_I, p1.mu_I);
  p1.rho_I = p0.rho_I * 6.0;
  EXPECT_EQ(solver.accept(p1).rho_I, p1.rho_I);
  EXPECT_EQ(solver.factorizations(), 2);
}
