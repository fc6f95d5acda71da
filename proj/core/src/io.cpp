#include "flexqp/io.hpp"

#include "flexqp/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace flexqp {

using json = nlohmann::json;

namespace {

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json csc_to_json(const SpMat& M) {
  SpMat c = M;
  c.makeCompressed();
  std::vector<int> col_ptr(c.outerIndexPtr(), c.outerIndexPtr() + c.cols() + 1);
  std::vector<int> row_idx(c.innerIndexPtr(), c.innerIndexPtr() + c.nonZeros());
  std::vector<double> val(c.valuePtr(), c.valuePtr() + c.nonZeros());
  return {{"col_ptr", col_ptr}, {"row_idx", row_idx}, {"val", val}};
}

SpMat csc_from_json(const json& j, int rows, int cols, const char* what) {
  const auto col_ptr = j.at("col_ptr").get<std::vector<int>>();
  const auto row_idx = j.at("row_idx").get<std::vector<int>>();
  const auto val = j.at("val").get<std::vector<double>>();
  if (static_cast<int>(col_ptr.size()) != cols + 1 || row_idx.size() != val.size() ||
      col_ptr.front() != 0 || col_ptr.back() != static_cast<int>(val.size()))
    throw LoadError(std::string("inconsistent CSC arrays for ") + what);
  std::vector<Triplet> t;
  t.reserve(val.size());
  for (int c = 0; c < cols; ++c) {
    if (col_ptr[c + 1] < col_ptr[c]) throw LoadError(std::string("decreasing col_ptr in ") + what);
    for (int k = col_ptr[c]; k < col_ptr[c + 1]; ++k) {
      if (row_idx[k] < 0 || row_idx[k] >= rows)
        throw LoadError(std::string("row index out of range in ") + what);
      t.emplace_back(row_idx[k], c, val[k]);
    }
  }
  return make_csc(rows, cols, t);
}

json problem_json(const QpProblem& prob) {
  return {{"name", prob.name()},
          {"n", prob.n()},
          {"m", prob.m()},
          {"p", prob.p()},
          {"P", csc_to_json(prob.P())},
          {"q", vec_to_json(prob.q())},
          {"G", csc_to_json(prob.G())},
          {"h", vec_to_json(prob.h())},
          {"A", csc_to_json(prob.A())},
          {"b", vec_to_json(prob.b())}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string problem_to_json(const QpProblem& prob, int indent) { return problem_json(prob).dump(indent); }

QpProblem problem_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const int n = j.at("n").get<int>(), m = j.at("m").get<int>(), p = j.at("p").get<int>();
    Vec q = vec_from_json(j.at("q")), h = vec_from_json(j.at("h")), b = vec_from_json(j.at("b"));
    if (q.size() != n || h.size() != m || b.size() != p)
      throw LoadError("vector lengths do not match n/m/p");
    return QpProblem(csc_from_json(j.at("P"), n, n, "P"), std::move(q), csc_from_json(j.at("G"), m, n, "G"),
                     std::move(h), csc_from_json(j.at("A"), p, n, "A"), std::move(b),
                     j.value("name", std::string{}));
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed problem file: ") + e.what());
  } catch (const ArgumentError& e) {
    throw LoadError(std::string("invalid problem: ") + e.what());
  }
}

void save_problem(const QpProblem& prob, const std::string& path) { write_file(path, problem_to_json(prob)); }

QpProblem load_problem(const std::string& path) { return problem_from_json(read_file(path)); }

std::uint64_t problem_hash(const QpProblem& prob) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : problem_to_json(prob)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string state_to_json(const QpProblem& prob, const SolverState& st) {
  json s = {{"k", st.k},
            {"x", vec_to_json(st.x)},
            {"x_tilde", vec_to_json(st.x_tilde)},
            {"s", vec_to_json(st.s)},
            {"s_tilde", vec_to_json(st.s_tilde)},
            {"z_I", vec_to_json(st.z_I)},
            {"z_I_tilde", vec_to_json(st.z_I_tilde)},
            {"w_s", vec_to_json(st.w_s)},
            {"y_I", vec_to_json(st.y_I)},
            {"nu_I", vec_to_json(st.nu_I)},
            {"z_E", vec_to_json(st.z_E)},
            {"z_E_tilde", vec_to_json(st.z_E_tilde)},
            {"y_E", vec_to_json(st.y_E)},
            {"nu_E", vec_to_json(st.nu_E)},
            {"x_prev", vec_to_json(st.x_prev)},
            {"s_prev", vec_to_json(st.s_prev)},
            {"z_I_prev", vec_to_json(st.z_I_prev)},
            {"z_E_prev", vec_to_json(st.z_E_prev)}};
  return json{{"problem", prob.name()}, {"hash", hex64(problem_hash(prob))}, {"state", s}}.dump();
}

SolverState state_from_json(const QpProblem& prob, const std::string& text) {
  SolverState st;
  try {
    const json j = json::parse(text);
    if (j.at("hash").get<std::string>() != hex64(problem_hash(prob)))
      throw LoadError("warm-start state was written for a different problem");
    const json& s = j.at("state");
    st.k = s.at("k").get<int>();
    st.x = vec_from_json(s.at("x"));
    st.x_tilde = vec_from_json(s.at("x_tilde"));
    st.s = vec_from_json(s.at("s"));
    st.s_tilde = vec_from_json(s.at("s_tilde"));
    st.z_I = vec_from_json(s.at("z_I"));
    st.z_I_tilde = vec_from_json(s.at("z_I_tilde"));
    st.w_s = vec_from_json(s.at("w_s"));
    st.y_I = vec_from_json(s.at("y_I"));
    st.nu_I = vec_from_json(s.at("nu_I"));
    st.z_E = vec_from_json(s.at("z_E"));
    st.z_E_tilde = vec_from_json(s.at("z_E_tilde"));
    st.y_E = vec_from_json(s.at("y_E"));
    st.nu_E = vec_from_json(s.at("nu_E"));
    st.x_prev = vec_from_json(s.at("x_prev"));
    st.s_prev = vec_from_json(s.at("s_prev"));
    st.z_I_prev = vec_from_json(s.at("z_I_prev"));
    st.z_E_prev = vec_from_json(s.at("z_E_prev"));
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed state file: ") + e.what());
  }
  try {
    st.check_dims(prob);
  } catch (const ArgumentError& e) {
    throw LoadError(std::string("state dimensions: ") + e.what());
  }
  return st;
}

void save_state(const QpProblem& prob, const SolverState& state, const std::string& path) {
  write_file(path, state_to_json(prob, state));
}

SolverState load_state(const QpProblem& prob, const std::string& path) {
  return state_from_json(prob, read_file(path));
}

std::string solution_to_json(const QpProblem& prob, const QpSolution& sol, double eps) {
  const FeasibilityReport rep = classify_feasibility(sol, eps);
  json stats = json::object();
  for (const auto& [k, v] : sol.stats) stats[k] = v;
  json j = {{"problem", prob.name()},
            {"status", to_string(sol.status)},
            {"iterations", sol.iterations},
            {"objective", objective(prob, sol.x)},
            {"qp_residual_inf", qp_residual(prob, sol.x, sol.y_I, sol.y_E).inf_norm},
            {"x", vec_to_json(sol.x)},
            {"y_I", vec_to_json(sol.y_I)},
            {"y_E", vec_to_json(sol.y_E)},
            {"z_I", vec_to_json(sol.z_I)},
            {"z_E", vec_to_json(sol.z_E)},
            {"violated_inequalities", rep.violated_inequalities},
            {"violated_equalities", rep.violated_equalities},
            {"stats", stats}};
  return j.dump();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw LoadError("write to '" + path + "' failed");
}

}  // namespace flexqp
