// flexqp command-line tool.
//
// Exit codes: 0 solved / completed, 2 converged with constraints of the
// original problem violated, 3 iteration or time budget exhausted (also
// unbounded and stalled runs), 1 usage or I/O error.

#include "flexqp/bench.hpp"
#include "flexqp/cert.hpp"
#include "flexqp/error.hpp"
#include "flexqp/io.hpp"
#include "flexqp/policy.hpp"
#include "flexqp/probgen.hpp"
#include "flexqp/solver.hpp"
#include "flexqp/sqp.hpp"
#include "flexqp/tasks.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace flexqp;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitBudget = 3;

struct CliConfig {
  std::string input;
  std::string output;
  double eps = 1e-3;
  int max_iter = 4000;
  std::optional<int> timeout_ms;
  std::vector<std::string> policies;
  std::string weights;
  std::string method = "direct";
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string trace;
};

void add_common(CLI::App* sub, CliConfig& cfg, bool multi_policy = false) {
  sub->add_option("--eps", cfg.eps, "Termination tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", cfg.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  sub->add_option("--timeout-ms", cfg.timeout_ms, "Wall-clock budget per solve (ms)")->check(CLI::PositiveNumber);
  auto* pol = sub->add_option("--policy", cfg.policies,
                              "fixed | adaptive | learned | learned:<weights> (solve default: adaptive)");
  if (!multi_policy) pol->expected(1);
  sub->add_option("--weights", cfg.weights, "Weight file for the learned policy");
  sub->add_option("--method", cfg.method, "Block-1 linear solve")->check(CLI::IsMember({"direct", "indirect"}));
}

std::shared_ptr<const ParamPolicy> make_policy(const std::string& spec, const std::string& weights_flag) {
  if (spec == "fixed") return std::make_shared<ParamPolicy>(ParamPolicy::fixed(ScalarParams{}));
  if (spec == "adaptive") return std::make_shared<ParamPolicy>(ParamPolicy::adaptive());
  if (spec == "learned" || spec.rfind("learned:", 0) == 0) {
    const std::string path = spec == "learned" ? weights_flag : spec.substr(8);
    if (path.empty()) throw ArgumentError("--policy learned requires --weights <path>");
    auto w = std::make_shared<const PolicyWeights>(load_weights(path));
    return std::make_shared<ParamPolicy>(ParamPolicy::learned(w));
  }
  throw ArgumentError("unknown policy '" + spec + "'");
}

SolveSettings make_settings(const CliConfig& cfg, const std::string& policy) {
  SolveSettings s;
  s.eps_abs = cfg.eps;
  s.max_iter = cfg.max_iter;
  if (cfg.timeout_ms) s.time_limit = std::chrono::duration<double>(*cfg.timeout_ms / 1000.0);
  s.method = cfg.method == "indirect" ? LinearMethod::Indirect : LinearMethod::Direct;
  if (s.method == LinearMethod::Indirect) s.cg = CgConfig{};
  s.policy = make_policy(policy, cfg.weights);
  s.validate();
  return s;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text << '\n';
  else
    write_file(path, text + "\n");
}

int exit_code(SolveStatus st) {
  switch (st) {
    case SolveStatus::Solved:
      return kExitOk;
    case SolveStatus::SolvedInfeasibleOriginal:
      return kExitInfeasible;
    default:
      return kExitBudget;
  }
}

std::map<std::string, int> parse_scale(const std::vector<std::string>& items) {
  std::map<std::string, int> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--scale expects key=value, got '" + it + "'");
    try {
      out[it.substr(0, eq)] = std::stoi(it.substr(eq + 1));
    } catch (const std::exception&) {
      throw ArgumentError("--scale value is not an integer: '" + it + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& cls, int count, std::uint64_t seed, const std::string& dir,
                 const std::vector<std::string>& scale) {
  std::filesystem::create_directories(dir);
  write_dataset(parse_class(cls), count, seed, dir, parse_scale(scale));
  std::cout << (std::filesystem::path(dir) / "manifest.json").string() << '\n';
  return kExitOk;
}

int cmd_solve(const CliConfig& cfg, const std::string& warm_path, const std::string& state_out) {
  const QpProblem prob = load_problem(cfg.input);
  SolveSettings s = make_settings(cfg, cfg.policies.empty() ? "adaptive" : cfg.policies.front());
  s.record_trace = !cfg.trace.empty();
  std::optional<SolverState> warm;
  if (!warm_path.empty()) warm = load_state(prob, warm_path);
  const SolveResult r = solve(prob, s, warm ? &*warm : nullptr);

  if (!cfg.trace.empty()) {
    std::ofstream out(cfg.trace, std::ios::trunc);
    if (!out) throw LoadError("cannot open '" + cfg.trace + "' for writing");
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      const ResidualBundle& b = r.trace[k];
      out << json{{"k", k},
                  {"relaxed_inf", b.relaxed_inf()},
                  {"admm_primal_inf", b.admm_primal_inf()},
                  {"admm_dual_inf", b.admm_dual_inf()},
                  {"qp_residual_inf", b.qp_residual_inf}}
                 .dump()
          << '\n';
    }
  }
  if (!state_out.empty()) save_state(prob, r.state, state_out);
  emit(cfg.output, solution_to_json(prob, r.solution, cfg.eps));
  return exit_code(r.solution.status);
}

int cmd_bench(const CliConfig& cfg, const std::string& csv_path) {
  const Manifest manifest = load_manifest(cfg.input);
  std::vector<SolverConfig> solvers;
  const std::vector<std::string> policies = cfg.policies.empty() ? std::vector<std::string>{"fixed", "adaptive"}
                                                                 : cfg.policies;
  for (const auto& p : policies) solvers.push_back({p.rfind("learned:", 0) == 0 ? "learned" : p, make_settings(cfg, p)});

  BenchmarkOptions opts;
  opts.eps = cfg.eps;
  opts.jobs = cfg.jobs;
  opts.timeout = cfg.timeout_ms ? std::optional<std::chrono::duration<double>>(*cfg.timeout_ms / 1000.0)
                                : std::nullopt;
  const auto records = run_benchmark(manifest, solvers, opts);
  if (!csv_path.empty()) write_file(csv_path, records_to_csv(records));
  emit(cfg.output, benchmark_summary_json(records));
  return kExitOk;
}

struct SqpFlags {
  std::string hessian = "gn";
  double eps = 1e-2;
  int max_iter = 50;
  std::optional<double> qp_eps;
  std::optional<int> qp_max_iter;
  bool record_iterates = false;
  bool no_line_search = false;
};

int cmd_sqp(const CliConfig& cfg, const SqpFlags& f) {
  const TaskSpec task = load_task(cfg.input);
  const NlpSpec nlp = build_nlp(task, f.hessian == "exact" ? HessianMode::Exact : HessianMode::GaussNewton);
  SqpSettings s;
  s.eps = f.eps;
  s.max_iter = f.max_iter;
  s.record_iterates = f.record_iterates;
  s.merit.line_search = !f.no_line_search;
  if (f.qp_eps) s.qp.eps_abs = *f.qp_eps;
  if (f.qp_max_iter) s.qp.max_iter = *f.qp_max_iter;
  if (cfg.timeout_ms) s.qp.time_limit = std::chrono::duration<double>(*cfg.timeout_ms / 1000.0);
  if (cfg.method == "indirect") {
    s.qp.method = LinearMethod::Indirect;
    s.qp.cg = CgConfig{};
  }
  if (!cfg.policies.empty()) s.qp.policy = make_policy(cfg.policies.front(), cfg.weights);
  const SqpResult r = sqp_solve(nlp, s);
  emit(cfg.output, sqp_result_to_json(layout(task), r));
  return r.status == SqpStatus::Converged ? kExitOk : kExitBudget;
}

int cmd_task(const std::string& kind, std::uint64_t seed, const std::string& out) {
  TaskSpec task;
  if (kind == "dubins")
    task = random_dubins_task(seed);
  else if (kind == "quadrotor")
    task = random_quadrotor_task(seed);
  else if (kind == "safety_filter")
    task = random_safety_filter_task(seed);
  else
    task = start_inside_obstacle_task();
  emit(out, task_to_json(task, 2));
  return kExitOk;
}

struct CertifyFlags {
  std::optional<double> kl;
  std::optional<int> N, M;
  double delta = 0.009;
  double delta_prime = 0.001;
  std::optional<double> c;
};

// Losses file: an N x M array, {"losses": N x M array} or
// {"mean_loss": .., "N": .., "M": ..}. A "kl_divergence" entry supplies the
// KL term unless --kl or --weights is given.
int cmd_certify(const CliConfig& cfg, const CertifyFlags& f) {
  json j;
  try {
    j = json::parse(read_file(cfg.input));
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed losses file: ") + e.what());
  }
  double mean = 0.0;
  int N = 0, M = 0;
  std::optional<double> kl = f.kl;
  const json* grid = j.is_array() ? &j : (j.contains("losses") ? &j.at("losses") : nullptr);
  if (grid) {
    N = static_cast<int>(grid->size());
    double sum = 0.0;
    for (const auto& row : *grid) {
      const auto v = row.is_array() ? row.get<std::vector<double>>() : std::vector<double>{row.get<double>()};
      if (M == 0) M = static_cast<int>(v.size());
      if (static_cast<int>(v.size()) != M || M == 0) throw LoadError("losses grid rows differ in length");
      for (double x : v) sum += x;
    }
    if (N == 0) throw LoadError("empty losses grid");
    mean = sum / (static_cast<double>(N) * M);
  } else {
    mean = j.at("mean_loss").get<double>();
    N = j.value("N", 0);
    M = j.value("M", 0);
  }
  if (!kl && j.is_object() && j.contains("kl_divergence")) kl = j.at("kl_divergence").get<double>();
  if (!kl && !cfg.weights.empty()) kl = load_weights(cfg.weights).kl_divergence;
  if (f.N) N = *f.N;
  if (f.M) M = *f.M;

  json out = {{"sample_loss", mean}, {"N", N}, {"M", M}};
  if (f.c) {
    out["c"] = *f.c;
    out["bound"] = inv_kl_bernoulli(mean, *f.c);
  } else {
    if (!kl) throw ArgumentError("certify needs a KL value (--kl, --weights or kl_divergence in the file)");
    if (N <= 0 || M <= 0) throw ArgumentError("certify needs positive N and M");
    out["kl"] = *kl;
    out["delta"] = f.delta;
    out["delta_prime"] = f.delta_prime;
    out["bound"] = final_bound(mean, *kl, N, M, f.delta, f.delta_prime);
  }
  emit(cfg.output, out.dump());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FlexQP solver tools"};
  app.require_subcommand(1);

  CliConfig cfg;

  std::string gen_class, gen_dir;
  int gen_count = 1;
  std::vector<std::string> gen_scale;
  auto* gen = app.add_subcommand("generate", "Write a seeded problem set and its manifest");
  gen->add_option("class", gen_class, "Problem class")->required();
  gen->add_option("count", gen_count, "Number of problems")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", cfg.seed, "Base seed");
  gen->add_option("-o,--out", gen_dir, "Output directory")->required();
  gen->add_option("--scale", gen_scale, "Scale override key=value (repeatable)");

  std::string warm_path, state_out;
  auto* sol = app.add_subcommand("solve", "Solve one problem file");
  sol->add_option("problem", cfg.input, "Problem JSON")->required();
  sol->add_option("-o,--out", cfg.output, "Solution JSON (default stdout)");
  sol->add_option("--trace", cfg.trace, "Per-iteration residuals as JSON lines");
  sol->add_option("--warm-start", warm_path, "Solver state to resume from");
  sol->add_option("--save-state", state_out, "Write the final solver state");
  add_common(sol, cfg);

  std::string csv_path;
  auto* bench = app.add_subcommand("bench", "Benchmark solver configurations over a manifest");
  bench->add_option("manifest", cfg.input, "Manifest JSON")->required();
  bench->add_option("-o,--out", cfg.output, "Summary JSON (default stdout)");
  bench->add_option("--csv", csv_path, "Per-solve records");
  bench->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_common(bench, cfg, true);

  SqpFlags sqpf;
  auto* sqp = app.add_subcommand("sqp", "Run SQP on a task file");
  sqp->add_option("task", cfg.input, "Task JSON")->required();
  sqp->add_option("-o,--out", cfg.output, "Trajectory JSON (default stdout)");
  sqp->add_option("--hessian", sqpf.hessian, "gn | exact")->check(CLI::IsMember({"gn", "exact"}));
  sqp->add_option("--eps", sqpf.eps, "NLP residual tolerance")->check(CLI::PositiveNumber);
  sqp->add_option("--max-iter", sqpf.max_iter, "SQP iteration cap")->check(CLI::PositiveNumber);
  sqp->add_option("--qp-eps", sqpf.qp_eps, "Subproblem tolerance")->check(CLI::PositiveNumber);
  sqp->add_option("--qp-max-iter", sqpf.qp_max_iter, "Subproblem iteration cap")->check(CLI::PositiveNumber);
  sqp->add_option("--timeout-ms", cfg.timeout_ms, "Per-subproblem budget (ms)")->check(CLI::PositiveNumber);
  sqp->add_option("--policy", cfg.policies, "Subproblem policy")->expected(1);
  sqp->add_option("--weights", cfg.weights, "Weight file for the learned policy");
  sqp->add_option("--method", cfg.method, "Block-1 linear solve")->check(CLI::IsMember({"direct", "indirect"}));
  sqp->add_flag("--record-iterates", sqpf.record_iterates, "Keep every iterate in the output");
  sqp->add_flag("--full-step", sqpf.no_line_search, "Skip the merit line search");

  std::string task_kind, task_out;
  auto* task = app.add_subcommand("task", "Write a random SQP task");
  task->add_option("kind", task_kind, "dubins | quadrotor | safety_filter | start_inside")
      ->required()
      ->check(CLI::IsMember({"dubins", "quadrotor", "safety_filter", "start_inside"}));
  task->add_option("--seed", cfg.seed, "Seed");
  task->add_option("-o,--out", task_out, "Task JSON (default stdout)");

  CertifyFlags cf;
  auto* cert = app.add_subcommand("certify", "PAC-Bayes bound from a loss grid");
  cert->add_option("losses", cfg.input, "Losses JSON")->required();
  cert->add_option("-o,--out", cfg.output, "Result JSON (default stdout)");
  cert->add_option("--kl", cf.kl, "KL divergence of posterior and prior")->check(CLI::NonNegativeNumber);
  cert->add_option("--weights", cfg.weights, "Weight file carrying kl_divergence");
  cert->add_option("--N", cf.N, "Number of problems")->check(CLI::PositiveNumber);
  cert->add_option("--M", cf.M, "Policy samples per problem")->check(CLI::PositiveNumber);
  cert->add_option("--delta", cf.delta, "Confidence for the bound")->check(CLI::Range(0.0, 1.0));
  cert->add_option("--delta-prime", cf.delta_prime, "Confidence for the sampling correction")
      ->check(CLI::Range(0.0, 1.0));
  cert->add_option("--c", cf.c, "Invert KL at this value directly")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_class, gen_count, cfg.seed, gen_dir, gen_scale);
    if (*sol) return cmd_solve(cfg, warm_path, state_out);
    if (*bench) return cmd_bench(cfg, csv_path);
    if (*sqp) return cmd_sqp(cfg, sqpf);
    if (*task) return cmd_task(task_kind, cfg.seed, task_out);
    if (*cert) return cmd_certify(cfg, cf);
  } catch (const std::exception& e) {
    std::cerr << "flexqp: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
