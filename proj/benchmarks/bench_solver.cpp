#include "flexqp/linsys.hpp"
#include "flexqp/probgen.hpp"
#include "flexqp/solver.hpp"

#include <benchmark/benchmark.h>

using namespace flexqp;

namespace {

QpProblem bench_problem(int which) {
  static const ProblemClass classes[] = {ProblemClass::RandomQP, ProblemClass::Portfolio, ProblemClass::Huber,
                                         ProblemClass::OscillatingMasses};
  return generate({classes[which], 0, {}});
}

const char* bench_label(int which) {
  static const char* names[] = {"random_qp", "portfolio", "huber", "oscillating_masses"};
  return names[which];
}

void BM_SoftThreshold(benchmark::State& st) {
  const Vec v = Vec::LinSpaced(st.range(0), -3.0, 3.0);
  for (auto _ : st) benchmark::DoNotOptimize(soft_threshold(v, 1.0));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_SoftThreshold)->Arg(1 << 8)->Arg(1 << 14);

void BM_KktFactor(benchmark::State& st) {
  const QpProblem prob = bench_problem(static_cast<int>(st.range(0)));
  const SpMat K = assemble_kkt(prob, SolverParams::defaults(prob.m(), prob.p()));
  for (auto _ : st) benchmark::DoNotOptimize(KktFactorization::factor(K));
  st.SetLabel(bench_label(static_cast<int>(st.range(0))));
}
BENCHMARK(BM_KktFactor)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_KktRefactor(benchmark::State& st) {
  const QpProblem prob = bench_problem(static_cast<int>(st.range(0)));
  const SpMat K = assemble_kkt(prob, SolverParams::defaults(prob.m(), prob.p()));
  KktFactorization f = KktFactorization::factor(K);
  for (auto _ : st) f.refactor(K);
  st.SetLabel(bench_label(static_cast<int>(st.range(0))));
}
BENCHMARK(BM_KktRefactor)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_AdmmStep(benchmark::State& st) {
  const QpProblem prob = bench_problem(static_cast<int>(st.range(0)));
  const LinearMethod method = st.range(1) ? LinearMethod::Indirect : LinearMethod::Direct;
  Block1Solver linear(prob, method, CgConfig{1e-6, 0, Preconditioner::Jacobi});
  const SolverParams params = linear.accept(SolverParams::defaults(prob.m(), prob.p()));
  SolverState s = SolverState::cold_start(prob);
  for (auto _ : st) s = admm_step(prob, s, params, linear);
  st.SetLabel(std::string(bench_label(static_cast<int>(st.range(0)))) + (st.range(1) ? "/indirect" : "/direct"));
}
BENCHMARK(BM_AdmmStep)->ArgsProduct({{0, 1, 2, 3}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_Solve(benchmark::State& st) {
  const QpProblem prob = bench_problem(static_cast<int>(st.range(0)));
  SolveSettings settings;
  if (st.range(1)) settings.policy = std::make_shared<ParamPolicy>(ParamPolicy::adaptive());
  int iters = 0;
  for (auto _ : st) iters = solve(prob, settings).solution.iterations;
  st.counters["admm_iters"] = iters;
  st.SetLabel(std::string(bench_label(static_cast<int>(st.range(0)))) + (st.range(1) ? "/adaptive" : "/fixed"));
}
BENCHMARK(BM_Solve)->ArgsProduct({{0, 1, 2, 3}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
