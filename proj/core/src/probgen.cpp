#include "flexqp/probgen.hpp"

#include "flexqp/error.hpp"
#include "flexqp/io.hpp"
#include "flexqp/oracle.hpp"
#include "flexqp/rng.hpp"

#include <json.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

namespace flexqp {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct ClassInfo {
  ProblemClass cls;
  const char* name;
  const char* alias;
  std::vector<std::pair<const char*, int>> defaults;
};

const std::vector<ClassInfo>& class_table() {
  static const std::vector<ClassInfo> table = {
      {ProblemClass::RandomQP, "RandomQP", "random_qp", {{"n", 50}, {"m", 40}}},
      {ProblemClass::RandomQPEq, "RandomQPEq", "random_qp_eq", {{"n", 50}, {"m", 25}, {"p", 20}}},
      {ProblemClass::Portfolio, "Portfolio", "portfolio", {{"n", 250}, {"k", 25}}},
      {ProblemClass::Svm, "Svm", "svm", {{"n", 10}, {"m", 200}}},
      {ProblemClass::Lasso, "Lasso", "lasso", {{"n", 5}, {"m", 500}}},
      {ProblemClass::Huber, "Huber", "huber", {{"n", 10}, {"m", 100}}},
      {ProblemClass::RandomLinearOcp, "RandomLinearOcp", "random_ocp", {{"nx", 8}, {"nu", 4}, {"T", 10}}},
      {ProblemClass::DoubleIntegrator, "DoubleIntegrator", "double_integrator", {{"T", 20}}},
      {ProblemClass::OscillatingMasses, "OscillatingMasses", "osc_masses", {{"T", 10}}},
  };
  return table;
}

const ClassInfo& info(ProblemClass c) {
  for (const ClassInfo& i : class_table())
    if (i.cls == c) return i;
  throw SpecError("unknown problem class");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Merged dimension map; rejects unknown keys and non-positive values.
std::map<std::string, int> resolve_scale(const GenSpec& spec) {
  const ClassInfo& ci = info(spec.cls);
  std::map<std::string, int> dims;
  for (const auto& [k, v] : ci.defaults) dims[k] = v;
  for (const auto& [k, v] : spec.scale) {
    if (!dims.count(k)) throw SpecError(std::string(ci.name) + " has no scale parameter '" + k + "'");
    if (v <= 0) throw SpecError("scale parameter '" + k + "' must be positive");
    dims[k] = v;
  }
  if (spec.cls == ProblemClass::Portfolio && dims["k"] >= dims["n"])
    throw SpecError("portfolio needs k < n");
  if (spec.cls == ProblemClass::Svm && dims["m"] < 2) throw SpecError("svm needs at least two points");
  if (spec.cls == ProblemClass::RandomQPEq && dims["p"] > dims["n"])
    throw SpecError("random QP with equalities needs p <= n");
  return dims;
}

Mat normal_matrix(Rng& rng, int rows, int cols) {
  Mat M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = rng.normal();
  return M;
}

Vec normal_vector(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Bernoulli(density) mask over the whole matrix first, then N(0,1) values
// for the kept entries in row-major order.
Mat sparse_normal_matrix(Rng& rng, int rows, int cols, double density) {
  std::vector<char> mask(static_cast<std::size_t>(rows) * cols);
  for (auto& b : mask) b = rng.bernoulli(density);
  Mat M = Mat::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (mask[static_cast<std::size_t>(i) * cols + j]) M(i, j) = rng.normal();
  return M;
}

// v_i = 0 with probability 1/2, else N(0, 1/n); mask first.
Vec sparse_coefficients(Rng& rng, int n) {
  std::vector<char> mask(n);
  for (auto& b : mask) b = rng.bernoulli(0.5);
  Vec v = Vec::Zero(n);
  const double sd = std::sqrt(1.0 / n);
  for (int i = 0; i < n; ++i)
    if (!mask[i]) v[i] = rng.normal(0.0, sd);
  return v;
}

struct Builder {
  int n;
  std::vector<Triplet> P, G, A;
  Vec q;
  std::vector<double> h, b;

  explicit Builder(int n_) : n(n_), q(Vec::Zero(n_)) {}

  int add_ineq(double rhs) {
    h.push_back(rhs);
    return static_cast<int>(h.size()) - 1;
  }
  int add_eq(double rhs) {
    b.push_back(rhs);
    return static_cast<int>(b.size()) - 1;
  }
  void p_diag(int i, double v) { P.emplace_back(i, i, v); }

  QpProblem build(const std::string& name) const {
    const int m = static_cast<int>(h.size()), p = static_cast<int>(b.size());
    return QpProblem(make_csc(n, n, P), q, make_csc(m, n, G),
                     Eigen::Map<const Vec>(h.data(), m), make_csc(p, n, A),
                     Eigen::Map<const Vec>(b.data(), p), name);
  }
};

std::string instance_name(const GenSpec& spec) {
  return std::string(info(spec.cls).alias) + "_" + std::to_string(spec.seed);
}

// P = M'M + I; M, q, G, xi, A, zeta drawn in that order.
QpProblem gen_random_qp(const GenSpec& spec, int n, int m, int p) {
  Rng rng(spec.seed);
  const Mat M = normal_matrix(rng, n, n);
  const Vec q = normal_vector(rng, n);
  const Mat G = normal_matrix(rng, m, n);
  const Vec xi = normal_vector(rng, n);
  const Mat A = normal_matrix(rng, p, n);
  const Vec zeta = normal_vector(rng, n);
  Mat P = M.transpose() * M;
  P.diagonal().array() += 1.0;
  return QpProblem(upper_from_dense(P), q, sparse_from_dense(G), G * xi, sparse_from_dense(A), A * zeta,
                   instance_name(spec));
}

// Variables (x, y), x in R^n, y in R^k.
QpProblem gen_portfolio(const GenSpec& spec, int n, int k) {
  Rng rng(spec.seed);
  const double gamma = 1.0;
  const Mat F = sparse_normal_matrix(rng, n, k, 0.5);
  Vec D(n);
  for (int i = 0; i < n; ++i) D[i] = rng.uniform(0.0, std::sqrt(static_cast<double>(k)));
  const Vec mu = normal_vector(rng, n);

  Builder bld(n + k);
  for (int i = 0; i < n; ++i) bld.p_diag(i, 2.0 * D[i]);
  for (int j = 0; j < k; ++j) bld.p_diag(n + j, 2.0);
  bld.q.head(n) = -mu / gamma;
  // y - F'x = 0
  for (int j = 0; j < k; ++j) {
    const int row = bld.add_eq(0.0);
    for (int i = 0; i < n; ++i)
      if (F(i, j) != 0.0) bld.A.emplace_back(row, i, -F(i, j));
    bld.A.emplace_back(row, n + j, 1.0);
  }
  const int budget = bld.add_eq(1.0);
  for (int i = 0; i < n; ++i) bld.A.emplace_back(budget, i, 1.0);
  for (int i = 0; i < n; ++i) bld.G.emplace_back(bld.add_ineq(0.0), i, -1.0);
  return bld.build(instance_name(spec));
}

// Variables (x, t), x in R^n, t in R^m.
QpProblem gen_svm(const GenSpec& spec, int n, int m) {
  Rng rng(spec.seed);
  const double lambda = 1.0;
  const double sd = std::sqrt(1.0 / n);
  Mat A(m, n);
  Vec label(m);
  for (int i = 0; i < m; ++i) {
    const bool first = i < m / 2;
    label[i] = first ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal(first ? 1.0 / n : -1.0 / n, sd);
  }
  Builder bld(n + m);
  for (int j = 0; j < n; ++j) bld.p_diag(j, 2.0);
  bld.q.tail(m).setConstant(lambda);
  // diag(b) A x - t <= -1
  for (int i = 0; i < m; ++i) {
    const int row = bld.add_ineq(-1.0);
    for (int j = 0; j < n; ++j) bld.G.emplace_back(row, j, label[i] * A(i, j));
    bld.G.emplace_back(row, n + i, -1.0);
  }
  for (int i = 0; i < m; ++i) bld.G.emplace_back(bld.add_ineq(0.0), n + i, -1.0);
  return bld.build(instance_name(spec));
}

// Variables (x, y, t), x, t in R^n, y in R^m.
QpProblem gen_lasso(const GenSpec& spec, int n, int m) {
  Rng rng(spec.seed);
  const Mat A = sparse_normal_matrix(rng, m, n, 0.15);
  const Vec v = sparse_coefficients(rng, n);
  const Vec eps = normal_vector(rng, m);
  const Vec b = A * v + eps;
  const double lambda = (A.transpose() * b).lpNorm<Eigen::Infinity>() / 5.0;

  Builder bld(2 * n + m);
  for (int i = 0; i < m; ++i) bld.p_diag(n + i, 2.0);
  bld.q.tail(n).setConstant(lambda);
  // A x - y = b
  for (int i = 0; i < m; ++i) {
    const int row = bld.add_eq(b[i]);
    for (int j = 0; j < n; ++j)
      if (A(i, j) != 0.0) bld.A.emplace_back(row, j, A(i, j));
    bld.A.emplace_back(row, n + i, -1.0);
  }
  // x - t <= 0, -x - t <= 0
  for (int j = 0; j < n; ++j) {
    const int row = bld.add_ineq(0.0);
    bld.G.emplace_back(row, j, 1.0);
    bld.G.emplace_back(row, n + m + j, -1.0);
  }
  for (int j = 0; j < n; ++j) {
    const int row = bld.add_ineq(0.0);
    bld.G.emplace_back(row, j, -1.0);
    bld.G.emplace_back(row, n + m + j, -1.0);
  }
  return bld.build(instance_name(spec));
}

// Variables (x, u, r, s), x in R^n and u, r, s in R^m.
QpProblem gen_huber(const GenSpec& spec, int n, int m) {
  Rng rng(spec.seed);
  const double delta = 1.0;
  const Mat A = sparse_normal_matrix(rng, m, n, 0.15);
  const Vec v = sparse_coefficients(rng, n);
  std::vector<char> outlier(m);
  for (auto& o : outlier) o = !rng.bernoulli(0.95);
  Vec eps(m);
  for (int i = 0; i < m; ++i) eps[i] = outlier[i] ? rng.uniform(0.0, 10.0) : rng.normal(0.0, 0.5);
  const Vec b = A * v + eps;

  Builder bld(n + 3 * m);
  for (int i = 0; i < m; ++i) bld.p_diag(n + i, 2.0);
  bld.q.tail(2 * m).setConstant(2.0 * delta);
  // A x - u - r + s = b
  for (int i = 0; i < m; ++i) {
    const int row = bld.add_eq(b[i]);
    for (int j = 0; j < n; ++j)
      if (A(i, j) != 0.0) bld.A.emplace_back(row, j, A(i, j));
    bld.A.emplace_back(row, n + i, -1.0);
    bld.A.emplace_back(row, n + m + i, -1.0);
    bld.A.emplace_back(row, n + 2 * m + i, 1.0);
  }
  for (int i = 0; i < 2 * m; ++i) bld.G.emplace_back(bld.add_ineq(0.0), n + m + i, -1.0);
  return bld.build(instance_name(spec));
}

Mat box_rows(int dim) {
  Mat M(2 * dim, dim);
  M << Mat::Identity(dim, dim), -Mat::Identity(dim, dim);
  return M;
}

QpProblem gen_random_ocp(const GenSpec& spec, int nx, int nu, int T) {
  Rng rng(spec.seed);
  LinearOcp ocp;
  ocp.T = T;
  // Redraw (consuming the stream) when X is numerically singular or the
  // Riccati iteration fails for the drawn system.
  for (int attempt = 0;; ++attempt) {
    if (attempt > 100) throw SpecError("could not draw usable dynamics");
    Vec a(nx);
    for (int i = 0; i < nx; ++i) a[i] = rng.uniform(-1.0, 1.0);
    const Mat X = normal_matrix(rng, nx, nx);
    const Mat B = normal_matrix(rng, nx, nu);
    std::vector<char> mask(nx);
    for (auto& b : mask) b = rng.bernoulli(0.7);
    Vec qd = Vec::Zero(nx);
    for (int i = 0; i < nx; ++i)
      if (mask[i]) qd[i] = rng.uniform(0.0, 10.0);
    Eigen::FullPivLU<Mat> lu(X);
    if (!lu.isInvertible() || lu.rcond() < 1e-10) continue;
    ocp.A = lu.inverse() * a.asDiagonal() * X;
    ocp.B = B;
    ocp.Q = qd.asDiagonal();
    ocp.R = 0.1 * Mat::Identity(nu, nu);
    try {
      ocp.QT = riccati_terminal_cost(ocp.A, ocp.B, ocp.Q, ocp.R);
    } catch (const SpecError&) {
      continue;
    }
    break;
  }
  Vec xb(nx), ub(nu);
  for (int i = 0; i < nx; ++i) xb[i] = rng.uniform(1.0, 2.0);
  for (int i = 0; i < nu; ++i) ub[i] = rng.uniform(0.0, 0.1);
  ocp.x0.resize(nx);
  for (int i = 0; i < nx; ++i) ocp.x0[i] = rng.uniform(-0.5 * xb[i], 0.5 * xb[i]);
  ocp.Ax = box_rows(nx);
  ocp.bx.resize(2 * nx);
  ocp.bx << xb, xb;
  ocp.Au = box_rows(nu);
  ocp.bu.resize(2 * nu);
  ocp.bu << ub, ub;
  return linear_ocp_qp(ocp, instance_name(spec));
}

QpProblem gen_double_integrator(const GenSpec& spec, int T) {
  Rng rng(spec.seed);
  LinearOcp ocp;
  ocp.T = T;
  ocp.A.resize(2, 2);
  ocp.A << 1.0, 1.0, 0.0, 1.0;
  ocp.B.resize(2, 1);
  ocp.B << 0.5, 0.1;
  ocp.Q = ocp.QT = Mat::Identity(2, 2);
  ocp.R = Mat::Identity(1, 1);
  ocp.Ax = box_rows(2);
  ocp.bx.resize(4);
  ocp.bx << 5.0, 1.0, 5.0, 1.0;
  ocp.Au = box_rows(1);
  ocp.bu = Vec::Constant(2, 0.1);
  ocp.x0.resize(2);
  ocp.x0 << rng.uniform(-1.0, 1.0), rng.uniform(-0.3, 0.3);
  return linear_ocp_qp(ocp, instance_name(spec));
}

QpProblem gen_oscillating_masses(const GenSpec& spec, int T) {
  Rng rng(spec.seed);
  const double c = 1.0, d = 0.1, a = -2.0 * c, b = 2.0, dt = 0.5;
  Mat L = Mat::Zero(6, 6);
  for (int i = 1; i < 6; ++i) L(i, i - 1) = 1.0;
  const Mat S = L + L.transpose();
  Mat Ac = Mat::Zero(12, 12);
  Ac.block(0, 6, 6, 6) = Mat::Identity(6, 6);
  Ac.block(6, 0, 6, 6) = a * Mat::Identity(6, 6) + c * S;
  Ac.block(6, 6, 6, 6) = b * Mat::Identity(6, 6) + d * S;
  Mat F(6, 3);
  F << 1, 0, 0,  //
      -1, 0, 0,  //
      0, 1, 0,   //
      0, 0, 1,   //
      0, -1, 0,  //
      0, 0, 1;
  Mat Bc = Mat::Zero(12, 3);
  Bc.bottomRows(6) = F;

  LinearOcp ocp;
  ocp.T = T;
  ocp.A = Mat::Identity(12, 12) + Ac * dt;
  ocp.B = Bc * dt;
  ocp.Q = ocp.QT = Mat::Identity(12, 12);
  ocp.R = Mat::Identity(3, 3);
  ocp.Ax = box_rows(12);
  ocp.bx = Vec::Constant(24, 4.0);
  ocp.Au = box_rows(3);
  ocp.bu = Vec::Constant(6, 0.5);
  ocp.x0.resize(12);
  for (int i = 0; i < 12; ++i) ocp.x0[i] = rng.uniform(-1.0, 1.0);
  return linear_ocp_qp(ocp, instance_name(spec));
}

}  // namespace

const char* class_name(ProblemClass c) { return info(c).name; }

ProblemClass parse_class(const std::string& name) {
  const std::string key = lower(name);
  for (const ClassInfo& i : class_table())
    if (key == lower(i.name) || key == i.alias) return i.cls;
  throw SpecError("unknown problem class '" + name + "'");
}

const std::vector<ProblemClass>& all_classes() {
  static const std::vector<ProblemClass> v = [] {
    std::vector<ProblemClass> out;
    for (const ClassInfo& i : class_table()) out.push_back(i.cls);
    return out;
  }();
  return v;
}

Dims expected_dims(const GenSpec& spec) {
  auto d = resolve_scale(spec);
  switch (spec.cls) {
    case ProblemClass::RandomQP: return {d["n"], d["m"], 0};
    case ProblemClass::RandomQPEq: return {d["n"], d["m"], d["p"]};
    case ProblemClass::Portfolio: return {d["n"] + d["k"], d["n"], d["k"] + 1};
    case ProblemClass::Svm: return {d["n"] + d["m"], 2 * d["m"], 0};
    case ProblemClass::Lasso: return {2 * d["n"] + d["m"], 2 * d["n"], d["m"]};
    case ProblemClass::Huber: return {d["n"] + 3 * d["m"], 2 * d["m"], d["m"]};
    case ProblemClass::RandomLinearOcp: {
      const int nx = d["nx"], nu = d["nu"], T = d["T"];
      return {(T + 1) * nx + T * nu, (T + 1) * 2 * nx + T * 2 * nu, (T + 1) * nx};
    }
    case ProblemClass::DoubleIntegrator: {
      const int T = d["T"];
      return {(T + 1) * 2 + T, (T + 1) * 4 + T * 2, (T + 1) * 2};
    }
    case ProblemClass::OscillatingMasses: {
      const int T = d["T"];
      return {(T + 1) * 12 + T * 3, (T + 1) * 24 + T * 6, (T + 1) * 12};
    }
  }
  throw SpecError("unknown problem class");
}

QpProblem generate(const GenSpec& spec) {
  auto d = resolve_scale(spec);
  switch (spec.cls) {
    case ProblemClass::RandomQP: return gen_random_qp(spec, d["n"], d["m"], 0);
    case ProblemClass::RandomQPEq: return gen_random_qp(spec, d["n"], d["m"], d["p"]);
    case ProblemClass::Portfolio: return gen_portfolio(spec, d["n"], d["k"]);
    case ProblemClass::Svm: return gen_svm(spec, d["n"], d["m"]);
    case ProblemClass::Lasso: return gen_lasso(spec, d["n"], d["m"]);
    case ProblemClass::Huber: return gen_huber(spec, d["n"], d["m"]);
    case ProblemClass::RandomLinearOcp: return gen_random_ocp(spec, d["nx"], d["nu"], d["T"]);
    case ProblemClass::DoubleIntegrator: return gen_double_integrator(spec, d["T"]);
    case ProblemClass::OscillatingMasses: return gen_oscillating_masses(spec, d["T"]);
  }
  throw SpecError("unknown problem class");
}

Mat riccati_terminal_cost(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  const int nx = static_cast<int>(A.rows());
  if (A.cols() != nx || B.rows() != nx || Q.rows() != nx || Q.cols() != nx || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw ArgumentError("riccati_terminal_cost: inconsistent shapes");
  Mat P = Q;
  for (int it = 0; it < 10000; ++it) {
    const Mat BtP = B.transpose() * P;
    const Mat S = R + BtP * B;
    const Mat K = S.ldlt().solve(BtP * A);
    Mat next = Q + A.transpose() * P * A - A.transpose() * BtP.transpose() * K;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double change = (next - P).lpNorm<Eigen::Infinity>();
    P = std::move(next);
    if (change <= 1e-10 * std::max(1.0, P.lpNorm<Eigen::Infinity>())) return P;
  }
  throw SpecError("Riccati iteration did not converge");
}

QpProblem linear_ocp_qp(const LinearOcp& ocp, const std::string& name) {
  const int nx = static_cast<int>(ocp.A.rows()), nu = static_cast<int>(ocp.B.cols()), T = ocp.T;
  if (T < 1) throw ArgumentError("linear OCP horizon must be at least 1");
  const int n = (T + 1) * nx + T * nu;
  auto xi = [&](int t) { return t * nx; };
  auto ui = [&](int t) { return (T + 1) * nx + t * nu; };

  Builder bld(n);
  auto add_block = [&](int off, const Mat& W) {
    for (int j = 0; j < W.cols(); ++j)
      for (int i = 0; i <= j; ++i)
        if (W(i, j) != 0.0 || i == j) bld.P.emplace_back(off + i, off + j, 2.0 * W(i, j));
  };
  for (int t = 0; t < T; ++t) add_block(xi(t), ocp.Q);
  add_block(xi(T), ocp.QT);
  for (int t = 0; t < T; ++t) add_block(ui(t), ocp.R);

  for (int i = 0; i < nx; ++i) bld.A.emplace_back(bld.add_eq(ocp.x0[i]), xi(0) + i, 1.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nx; ++i) {
      const int row = bld.add_eq(0.0);
      bld.A.emplace_back(row, xi(t + 1) + i, 1.0);
      for (int j = 0; j < nx; ++j)
        if (ocp.A(i, j) != 0.0) bld.A.emplace_back(row, xi(t) + j, -ocp.A(i, j));
      for (int j = 0; j < nu; ++j)
        if (ocp.B(i, j) != 0.0) bld.A.emplace_back(row, ui(t) + j, -ocp.B(i, j));
    }

  for (int t = 0; t <= T; ++t)
    for (int r = 0; r < ocp.Ax.rows(); ++r) {
      const int row = bld.add_ineq(ocp.bx[r]);
      for (int j = 0; j < nx; ++j)
        if (ocp.Ax(r, j) != 0.0) bld.G.emplace_back(row, xi(t) + j, ocp.Ax(r, j));
    }
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < ocp.Au.rows(); ++r) {
      const int row = bld.add_ineq(ocp.bu[r]);
      for (int j = 0; j < nu; ++j)
        if (ocp.Au(r, j) != 0.0) bld.G.emplace_back(row, ui(t) + j, ocp.Au(r, j));
    }
  return bld.build(name);
}

// ---------------------------------------------------------------------------
// Datasets

std::string manifest_to_json(const Manifest& mf) {
  json probs = json::array();
  for (const ManifestEntry& e : mf.problems) {
    json j = {{"file", e.file},
              {"class", class_name(e.cls)},
              {"seed", e.seed},
              {"n", e.dims.n},
              {"m", e.dims.m},
              {"p", e.dims.p}};
    j["oracle"] = e.oracle_file.empty() ? json(nullptr) : json(e.oracle_file);
    probs.push_back(j);
  }
  json scale = json::object();
  for (const auto& [k, v] : mf.scale) scale[k] = v;
  return json{{"class", class_name(mf.cls)}, {"base_seed", mf.base_seed}, {"scale", scale}, {"problems", probs}}
      .dump(2);
}

Manifest manifest_from_json(const std::string& text) {
  Manifest mf;
  try {
    const json j = json::parse(text);
    mf.cls = parse_class(j.at("class").get<std::string>());
    mf.base_seed = j.value("base_seed", std::uint64_t{0});
    if (j.contains("scale"))
      for (const auto& [k, v] : j["scale"].items()) mf.scale[k] = v.get<int>();
    for (const json& e : j.at("problems")) {
      ManifestEntry me;
      me.file = e.at("file").get<std::string>();
      me.cls = e.contains("class") ? parse_class(e["class"].get<std::string>()) : mf.cls;
      me.seed = e.value("seed", std::uint64_t{0});
      me.dims = {e.value("n", 0), e.value("m", 0), e.value("p", 0)};
      if (e.contains("oracle") && e["oracle"].is_string()) me.oracle_file = e["oracle"].get<std::string>();
      mf.problems.push_back(std::move(me));
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  }
  return mf;
}

Manifest load_manifest(const std::string& path) {
  Manifest mf = manifest_from_json(read_file(path));
  const fs::path base = fs::path(path).parent_path();
  for (ManifestEntry& e : mf.problems) {
    if (fs::path(e.file).is_relative()) e.file = (base / e.file).string();
    if (!e.oracle_file.empty() && fs::path(e.oracle_file).is_relative())
      e.oracle_file = (base / e.oracle_file).string();
  }
  return mf;
}

Manifest write_dataset(ProblemClass cls, int count, std::uint64_t base_seed, const std::string& dir,
                       const std::map<std::string, int>& scale) {
  if (count < 0) throw ArgumentError("count must be nonnegative");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LoadError("cannot create directory '" + dir + "': " + ec.message());

  Manifest mf;
  mf.cls = cls;
  mf.base_seed = base_seed;
  mf.scale = scale;
  for (int i = 0; i < count; ++i) {
    GenSpec spec{cls, base_seed + static_cast<std::uint64_t>(i), scale};
    const QpProblem prob = generate(spec);
    ManifestEntry e;
    e.cls = cls;
    e.seed = spec.seed;
    e.dims = {prob.n(), prob.m(), prob.p()};
    const std::string stem = std::string(info(cls).alias) + "_" + std::to_string(i);
    e.file = stem + ".json";
    save_problem(prob, (fs::path(dir) / e.file).string());
    if (prob.n() <= 30 && prob.m() <= 30) {
      const QpSolution sol = oracle_solve(prob);
      e.oracle_file = stem + "_oracle.json";
      write_file((fs::path(dir) / e.oracle_file).string(), solution_to_json(prob, sol, 1e-9));
    }
    mf.problems.push_back(std::move(e));
  }
  write_file((fs::path(dir) / "manifest.json").string(), manifest_to_json(mf));
  return mf;
}

}  // namespace flexqp
