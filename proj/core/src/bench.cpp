#include "flexqp/bench.hpp"

#include "flexqp/error.hpp"
#include "flexqp/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

namespace flexqp {

namespace {

BenchmarkRecord bench_one(const ManifestEntry& entry, const SolverConfig& solver, const BenchmarkOptions& opts,
                          const QpProblem* prob, const std::string& load_error) {
  BenchmarkRecord rec;
  rec.problem = entry.file;
  rec.problem_class = class_name(entry.cls);
  rec.seed = entry.seed;
  rec.solver = solver.tag;
  if (!prob) {
    rec.status = "Skipped";
    rec.error = load_error;
    return rec;
  }

  SolveSettings s = solver.settings;
  s.eps_abs = opts.eps;
  s.time_limit = opts.timeout;
  s.record_trace = false;
  s.on_iterate = nullptr;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SolveResult r = solve(*prob, s);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const QpSolution& sol = r.solution;
    rec.status = to_string(sol.status);
    rec.solved = sol.status == SolveStatus::Solved || sol.status == SolveStatus::SolvedInfeasibleOriginal;
    rec.elastic_only = sol.status == SolveStatus::SolvedInfeasibleOriginal;
    rec.iterations = sol.iterations;
    rec.factorizations = sol.stats.at("factorizations");
    rec.cg_iterations = sol.stats.at("cg_iterations");
    rec.qp_residual_inf = qp_residual(*prob, sol.x, sol.y_I, sol.y_E).inf_norm;
    rec.relaxed_residual_inf = relaxed_residuals(*prob, r.state).relaxed_inf();
    const FeasibilityReport rep = classify_feasibility(sol, opts.eps);
    rec.violations = static_cast<int>(rep.violated_inequalities.size() + rep.violated_equalities.size());
  } catch (const Error& e) {
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.status = "Error";
    rec.error = e.what();
  }
  return rec;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<BenchmarkRecord> run_benchmark(const Manifest& manifest, const std::vector<SolverConfig>& solvers,
                                           const BenchmarkOptions& opts) {
  if (!(opts.eps > 0.0)) throw ParameterError("benchmark eps must be positive");
  if (opts.jobs < 1) throw ParameterError("jobs must be at least 1");
  const std::size_t P = manifest.problems.size(), S = solvers.size();
  std::vector<BenchmarkRecord> records(P * S);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < P; i = next++) {
      const ManifestEntry& entry = manifest.problems[i];
      std::optional<QpProblem> prob;
      std::string err;
      try {
        prob = load_problem(entry.file);
      } catch (const Error& e) {
        err = e.what();
      }
      for (std::size_t k = 0; k < S; ++k)
        records[i * S + k] = bench_one(entry, solvers[k], opts, prob ? &*prob : nullptr, err);
    }
  };

  const int jobs = static_cast<int>(std::min<std::size_t>(opts.jobs, std::max<std::size_t>(P, 1)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

double shifted_geom_mean(const std::vector<double>& times, double shift) {
  if (times.empty()) throw ArgumentError("shifted_geom_mean of an empty sequence");
  if (!(shift > 0.0)) throw ArgumentError("shift must be positive");
  double acc = 0.0;
  for (double t : times) {
    if (!(t >= 0.0)) throw ArgumentError("times must be nonnegative");
    acc += std::log(t + shift);
  }
  return std::exp(acc / static_cast<double>(times.size())) - shift;
}

std::vector<double> normalize(const std::vector<double>& sgms) {
  if (sgms.empty()) throw ArgumentError("normalize of an empty sequence");
  const double best = *std::min_element(sgms.begin(), sgms.end());
  if (!(best > 0.0)) throw ArgumentError("normalize needs positive values");
  std::vector<double> out;
  out.reserve(sgms.size());
  for (double v : sgms) out.push_back(v / best);
  return out;
}

std::string records_to_csv(const std::vector<BenchmarkRecord>& records) {
  std::ostringstream os;
  os.precision(17);
  os << "problem,class,seed,solver,status,solved,elastic_only,wall_time,iterations,factorizations,"
        "cg_iterations,qp_residual_inf,relaxed_residual_inf,violations,error\n";
  for (const BenchmarkRecord& r : records)
    os << csv_field(r.problem) << ',' << r.problem_class << ',' << r.seed << ',' << csv_field(r.solver) << ','
       << r.status << ',' << (r.solved ? 1 : 0) << ',' << (r.elastic_only ? 1 : 0) << ',' << r.wall_time << ','
       << r.iterations << ',' << r.factorizations << ',' << r.cg_iterations << ',' << r.qp_residual_inf << ','
       << r.relaxed_residual_inf << ',' << r.violations << ',' << csv_field(r.error) << '\n';
  return os.str();
}

std::string benchmark_summary_json(const std::vector<BenchmarkRecord>& records, double shift) {
  using json = nlohmann::json;
  struct Acc {
    int count = 0, solved = 0;
    double iters = 0.0, facts = 0.0;
    std::vector<double> times;
  };
  std::map<std::string, std::map<std::string, Acc>> by_class;
  for (const BenchmarkRecord& r : records) {
    if (r.status == "Skipped") continue;
    Acc& a = by_class[r.problem_class][r.solver];
    ++a.count;
    a.solved += r.solved;
    a.iters += r.iterations;
    a.facts += static_cast<double>(r.factorizations);
    a.times.push_back(r.wall_time);
  }
  json out = json::object();
  for (auto& [cls, solvers] : by_class) {
    std::vector<std::string> tags;
    std::vector<double> sgms;
    for (auto& [tag, a] : solvers) {
      tags.push_back(tag);
      sgms.push_back(shifted_geom_mean(a.times, shift));
    }
    // Sub-microsecond means normalize poorly; floor the divisor.
    std::vector<double> floored = sgms;
    for (double& v : floored) v = std::max(v, 1e-12);
    const std::vector<double> norm = normalize(floored);
    json c = json::object();
    for (std::size_t i = 0; i < tags.size(); ++i) {
      const Acc& a = solvers[tags[i]];
      c[tags[i]] = {{"count", a.count},
                    {"solved_pct", 100.0 * a.solved / a.count},
                    {"mean_iterations", a.iters / a.count},
                    {"mean_factorizations", a.facts / a.count},
                    {"sgm_time", sgms[i]},
                    {"normalized_sgm", norm[i]}};
    }
    out[cls] = c;
  }
  return out.dump(2);
}

}  // namespace flexqp
