#pragma once

#include "flexqp/qp.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace flexqp {

enum class ProblemClass {
  RandomQP,
  RandomQPEq,
  Portfolio,
  Svm,
  Lasso,
  Huber,
  RandomLinearOcp,
  DoubleIntegrator,
  OscillatingMasses,
};

const char* class_name(ProblemClass c);
/// Accepts the names returned by class_name (case-insensitive) and the
/// short CLI forms ("random_qp", "portfolio", "osc_masses", ...).
ProblemClass parse_class(const std::string& name);
const std::vector<ProblemClass>& all_classes();

/// Scale override keys per class (all optional):
///   RandomQP: n, m            RandomQPEq: n, m, p       Portfolio: n, k
///   Svm: n (features), m (points)                       Lasso: n, m
///   Huber: n, m               RandomLinearOcp: nx, nu, T
///   DoubleIntegrator: T       OscillatingMasses: T
struct GenSpec {
  ProblemClass cls = ProblemClass::RandomQP;
  std::uint64_t seed = 0;
  std::map<std::string, int> scale;
};

struct Dims {
  int n = 0, m = 0, p = 0;
  bool operator==(const Dims&) const = default;
};

/// Dimensions of the emitted QP for a spec, without generating it.
Dims expected_dims(const GenSpec& spec);

/// Seeded instance in lifted QP form. Throws SpecError on an unknown or
/// invalid scale override.
QpProblem generate(const GenSpec& spec);

/// Fixed point of the discrete algebraic Riccati equation, iterated from
/// Q_T = Q until the update changes by at most 1e-10 (inf-norm). Throws
/// SpecError after 10000 iterations.
Mat riccati_terminal_cost(const Mat& A, const Mat& B, const Mat& Q, const Mat& R);

/// Linear OCP over x_0..x_T, u_0..u_{T-1} (stacked in that order) with cost
/// sum x'Qx + u'Ru + x_T'Q_T x_T, the initial condition and dynamics as
/// equalities, and A_x x_t <= b_x (t = 0..T), A_u u_t <= b_u (t < T).
struct LinearOcp {
  Mat A, B, Q, R, QT;
  Mat Ax, Au;
  Vec bx, bu, x0;
  int T = 1;
};

QpProblem linear_ocp_qp(const LinearOcp& ocp, const std::string& name = {});

struct ManifestEntry {
  std::string file;
  ProblemClass cls = ProblemClass::RandomQP;
  std::uint64_t seed = 0;
  Dims dims;
  std::string oracle_file;  // empty when no oracle solution was written
};

struct Manifest {
  ProblemClass cls = ProblemClass::RandomQP;
  std::uint64_t base_seed = 0;
  std::map<std::string, int> scale;
  std::vector<ManifestEntry> problems;
};

/// Writes `count` problems (seeds base_seed, base_seed + 1, ...) as
/// <dir>/<class>_<i>.json plus <dir>/manifest.json. When n and m are at most
/// 30 the oracle solution goes next to the problem as *_oracle.json.
/// Returns the manifest; throws LoadError if the directory is not writable.
Manifest write_dataset(ProblemClass cls, int count, std::uint64_t base_seed, const std::string& dir,
                       const std::map<std::string, int>& scale = {});

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);
/// Reads a manifest file; problem paths are resolved relative to its directory.
Manifest load_manifest(const std::string& path);

}  // namespace flexqp
