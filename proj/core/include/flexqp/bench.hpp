#pragma once

#include "flexqp/probgen.hpp"
#include "flexqp/solver.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace flexqp {

struct BenchmarkRecord {
  std::string problem;
  std::string problem_class;
  std::uint64_t seed = 0;
  std::string solver;
  /// A SolveStatus name, or "Skipped" when the problem file could not be
  /// loaded (error holds the reason).
  std::string status;
  /// Solved, or converged with a nonempty violation set (elastic_only).
  bool solved = false;
  bool elastic_only = false;
  double wall_time = 0.0;  // seconds, monotonic clock
  int iterations = 0;
  long long factorizations = 0;
  long long cg_iterations = 0;
  double qp_residual_inf = 0.0;
  double relaxed_residual_inf = 0.0;
  int violations = 0;
  std::string error;
};

struct SolverConfig {
  std::string tag;
  SolveSettings settings;
};

struct BenchmarkOptions {
  double eps = 1e-3;
  /// Per-solve budget; no iteration cap is applied beyond the solver
  /// settings' own max_iter.
  std::optional<std::chrono::duration<double>> timeout = std::chrono::duration<double>(1.0);
  /// Worker threads; problems are distributed dynamically and each record is
  /// written by exactly one worker.
  int jobs = 1;
};

/// Cold-start solves of every manifest problem with every solver config.
/// Records are ordered by problem, then by solver, regardless of jobs.
std::vector<BenchmarkRecord> run_benchmark(const Manifest& manifest, const std::vector<SolverConfig>& solvers,
                                           const BenchmarkOptions& opts = {});

/// exp(mean(log(t_i + shift))) - shift. Throws ArgumentError on an empty
/// sequence or a negative time.
double shifted_geom_mean(const std::vector<double>& times, double shift = 1.0);
/// Each value divided by the smallest one.
std::vector<double> normalize(const std::vector<double>& sgms);

/// Column order:
/// problem,class,seed,solver,status,solved,elastic_only,wall_time,iterations,
/// factorizations,cg_iterations,qp_residual_inf,relaxed_residual_inf,violations,error
std::string records_to_csv(const std::vector<BenchmarkRecord>& records);

/// Per class and solver: count, solved percentage, mean iterations, mean
/// factorizations, shifted geometric mean time and its normalized value.
std::string benchmark_summary_json(const std::vector<BenchmarkRecord>& records, double shift = 1.0);

}  // namespace flexqp
