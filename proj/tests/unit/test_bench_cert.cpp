#include "flexqp/bench.hpp"
#include "flexqp/cert.hpp"
#include "flexqp/error.hpp"
#include "flexqp/io.hpp"
#include "flexqp/oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace flexqp;
using namespace flexqp::test;

namespace fs = std::filesystem;

namespace {

double ref_kl(double p, double q) {
  auto term = [](double a, double b) { return a == 0.0 ? 0.0 : a * std::log(a / b); };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

// Plain bisection on the forward KL, kept separate from the library code.
double ref_inv_kl(double p, double c) {
  double lo = p, hi = 1.0;
  if (ref_kl(p, 1.0 - 1e-300) <= c) return 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ref_kl(p, mid) <= c ? lo : hi) = mid;
  }
  return lo;
}

fs::path scratch(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("flexqp_bench_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<SolverConfig> two_solvers() {
  SolverConfig fixed{"fixed", SolveSettings{}};
  SolverConfig adaptive{"adaptive", SolveSettings{}};
  adaptive.settings.policy = std::make_shared<ParamPolicy>(ParamPolicy::adaptive());
  return {fixed, adaptive};
}

std::string csv_without_timing(const std::vector<BenchmarkRecord>& recs) {
  std::vector<BenchmarkRecord> copy = recs;
  for (BenchmarkRecord& r : copy) r.wall_time = 0.0;
  return records_to_csv(copy);
}

}  // namespace

TEST(ShiftedGeomMean, Examples) {
  EXPECT_NEAR(shifted_geom_mean({0.0, 3.0}), 1.0, 1e-15);
  EXPECT_NEAR(shifted_geom_mean({2.5, 2.5, 2.5}), 2.5, 1e-14);
  EXPECT_NEAR(shifted_geom_mean({1.0, 4.0}, 2.0), std::sqrt(18.0) - 2.0, 1e-14);
  EXPECT_THROW(shifted_geom_mean({1.0, 4.0}, 0.0), ArgumentError);
  EXPECT_THROW(shifted_geom_mean({}), ArgumentError);
  EXPECT_THROW(shifted_geom_mean({1.0, -1.0}), ArgumentError);
}

TEST(ShiftedGeomMean, MonotoneAndPermutationInvariant) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t(7);
    for (double& v : t) v = U(g);
    const double base = shifted_geom_mean(t);
    std::vector<double> perm = t;
    std::shuffle(perm.begin(), perm.end(), g);
    EXPECT_NEAR(shifted_geom_mean(perm), base, 1e-12);
    std::vector<double> up = t;
    up[trial % 7] += 0.1;
    EXPECT_GT(shifted_geom_mean(up), base);
  }
}

TEST(Normalize, FastestIsOne) {
  const std::vector<double> r = normalize({2.0, 0.5, 1.0});
  EXPECT_DOUBLE_EQ(r[0], 4.0);
  EXPECT_DOUBLE_EQ(r[1], 1.0);
  EXPECT_DOUBLE_EQ(r[2], 2.0);
}

TEST(InvKl, Examples) {
  for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) EXPECT_NEAR(inv_kl_bernoulli(p, 0.0), p, 1e-10);
  for (double c : {0.01, 0.5, 2.0}) EXPECT_NEAR(inv_kl_bernoulli(0.0, c), 1.0 - std::exp(-c), 1e-9);
  EXPECT_NEAR(inv_kl_bernoulli(0.1, 0.05), ref_inv_kl(0.1, 0.05), 1e-8);
  EXPECT_NEAR(ref_kl(0.1, inv_kl_bernoulli(0.1, 0.05)), 0.05, 1e-8);
  EXPECT_THROW(inv_kl_bernoulli(0.5, -0.1), ArgumentError);
  EXPECT_THROW(inv_kl_bernoulli(1.5, 0.1), ArgumentError);
}

TEST(InvKl, MatchesReferenceAndIsMonotone) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = U(g), c = 2.0 * U(g);
    const double q = inv_kl_bernoulli(p, c);
    EXPECT_GE(q, p);
    EXPECT_NEAR(q, ref_inv_kl(p, c), 1e-8);
    EXPECT_GE(inv_kl_bernoulli(p, c + 0.01), q);
    EXPECT_GE(inv_kl_bernoulli(std::min(1.0, p + 0.01), c), q);
  }
  EXPECT_NEAR(kl_bernoulli(0.1, 0.3), ref_kl(0.1, 0.3), 1e-15);
  EXPECT_EQ(kl_bernoulli(0.0, 0.0), 0.0);
}

TEST(PacBound, ComposesTheInverseKl) {
  const double loss = 0.2, kl = 1.5, delta = 0.009, delta_prime = 0.001;
  const int N = 1000, M = 10;
  const double pac = pac_bound(loss, kl, N, delta);
  EXPECT_NEAR(pac, ref_inv_kl(loss, (kl + std::log(2.0 * std::sqrt(N) / delta)) / N), 1e-8);
  EXPECT_GE(pac, loss);

  const double corrected = ref_inv_kl(loss, std::log(2.0 / delta_prime) / M);
  const double expect = ref_inv_kl(corrected, (kl + std::log(2.0 * std::sqrt(N) / delta)) / N);
  EXPECT_NEAR(final_bound(loss, kl, N, M, delta, delta_prime), expect, 1e-8);

  Mat grid = Mat::Constant(N, M, loss);
  EXPECT_NEAR(final_bound(grid, kl, delta, delta_prime), expect, 1e-8);

  // tightens with more problems
  EXPECT_LT(pac_bound(loss, kl, 100000, delta), pac_bound(loss, kl, 1000, delta));
  EXPECT_THROW(pac_bound(loss, kl, 0, delta), ArgumentError);
  EXPECT_THROW(pac_bound(loss, kl, N, 1.5), ArgumentError);
}

TEST(Losses, GenBoundLossExamples) {
  EXPECT_DOUBLE_EQ(gen_bound_loss(1e-9, 1e-9), 0.0);
  EXPECT_DOUBLE_EQ(gen_bound_loss(1.0, 1e-9), 1.0);
  EXPECT_DOUBLE_EQ(gen_bound_loss(5.0, 1e-9), 1.0);
  EXPECT_NEAR(gen_bound_loss(1e-6, 1e-12), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(gen_bound_loss(1e-6, 0.0), 0.5);  // floored oracle residual

  const QpProblem prob = random_qp(1, 6, 4, 1);
  const QpSolution star = oracle_solve(prob);
  EXPECT_DOUBLE_EQ(gen_bound_loss(prob, star.x, star.y_I, star.y_E, star.x, star.y_I, star.y_E), 0.0);
}

TEST(Losses, ProgressLossExamples) {
  const Vec x0 = Vec::Zero(3), xs = Vec::Ones(3);
  EXPECT_DOUBLE_EQ(progress_loss(x0, xs, xs), 0.0);
  EXPECT_DOUBLE_EQ(progress_loss(x0, x0, xs), 1.0);
  EXPECT_DOUBLE_EQ(progress_loss(x0, 0.5 * xs, xs), 0.5);
  EXPECT_DOUBLE_EQ(progress_loss(x0, -xs, xs), 1.0);
  EXPECT_DOUBLE_EQ(progress_loss(xs, 2.0 * xs, xs), 0.0);
}

TEST(Benchmark, TrivialProblemsAreSolved) {
  const fs::path dir = scratch("trivial");
  const Manifest m = write_dataset(ProblemClass::RandomQP, 3, 0, dir.string(), {{"n", 5}, {"m", 3}});
  const auto recs = run_benchmark(load_manifest((dir / "manifest.json").string()), {two_solvers()[1]});
  ASSERT_EQ(recs.size(), 3u);
  for (const BenchmarkRecord& r : recs) {
    EXPECT_TRUE(r.solved) << r.problem;
    EXPECT_EQ(r.status, "Solved");
    EXPECT_FALSE(r.elastic_only);
    EXPECT_LE(r.qp_residual_inf, 1e-3);
    EXPECT_GT(r.iterations, 0);
    EXPECT_GE(r.factorizations, 1);
  }
  fs::remove_all(dir);
}

TEST(Benchmark, ZeroTimeoutGivesTimeouts) {
  const fs::path dir = scratch("timeout");
  write_dataset(ProblemClass::Huber, 2, 0, dir.string(), {{"n", 5}, {"m", 20}});
  BenchmarkOptions opts;
  opts.timeout = std::chrono::duration<double>(0.0);
  const auto recs = run_benchmark(load_manifest((dir / "manifest.json").string()), two_solvers(), opts);
  ASSERT_EQ(recs.size(), 4u);
  for (const BenchmarkRecord& r : recs) {
    EXPECT_EQ(r.status, "Timeout");
    EXPECT_FALSE(r.solved);
    EXPECT_GE(r.iterations, 0);
  }
  fs::remove_all(dir);
}

TEST(Benchmark, CountersAreDeterministicAcrossRunsAndJobs) {
  const fs::path dir = scratch("det");
  write_dataset(ProblemClass::Portfolio, 4, 7, dir.string(), {{"n", 30}, {"k", 5}});
  const Manifest m = load_manifest((dir / "manifest.json").string());
  BenchmarkOptions opts;
  opts.timeout.reset();
  const auto a = run_benchmark(m, two_solvers(), opts);
  const auto b = run_benchmark(m, two_solvers(), opts);
  opts.jobs = 3;
  const auto c = run_benchmark(m, two_solvers(), opts);
  EXPECT_EQ(csv_without_timing(a), csv_without_timing(b));
  EXPECT_EQ(csv_without_timing(a), csv_without_timing(c));
  ASSERT_EQ(a.size(), 8u);
  EXPECT_EQ(a[0].solver, "fixed");
  EXPECT_EQ(a[1].solver, "adaptive");
  EXPECT_EQ(a[0].problem, a[1].problem);
  fs::remove_all(dir);
}

TEST(Benchmark, MissingFileIsSkipped) {
  const fs::path dir = scratch("missing");
  write_dataset(ProblemClass::RandomQP, 2, 0, dir.string(), {{"n", 5}, {"m", 3}});
  const Manifest m = load_manifest((dir / "manifest.json").string());
  fs::remove(m.problems[0].file);
  const auto recs = run_benchmark(m, {two_solvers()[0]});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].status, "Skipped");
  EXPECT_FALSE(recs[0].error.empty());
  EXPECT_FALSE(recs[0].solved);
  EXPECT_NE(recs[1].status, "Skipped");
  fs::remove_all(dir);
}

TEST(Benchmark, CsvAndSummaryShapes) {
  BenchmarkRecord a;
  a.problem = "p0";
  a.problem_class = "RandomQP";
  a.solver = "fixed";
  a.status = "Solved";
  a.solved = true;
  a.wall_time = 0.0;
  a.iterations = 10;
  BenchmarkRecord b = a;
  b.solver = "adaptive";
  b.wall_time = 3.0;
  b.iterations = 20;

  const std::string csv = records_to_csv({a, b});
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "problem,class,seed,solver,status,solved,elastic_only,wall_time,iterations,factorizations,"
            "cg_iterations,qp_residual_inf,relaxed_residual_inf,violations,error");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 2);

  const auto j = nlohmann::json::parse(benchmark_summary_json({a, b}));
  ASSERT_FALSE(j.dump().empty());
  const std::string dump = j.dump();
  EXPECT_NE(dump.find("RandomQP"), std::string::npos);
  EXPECT_NE(dump.find("adaptive"), std::string::npos);
}
