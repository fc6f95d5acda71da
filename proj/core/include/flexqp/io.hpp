#pragma once

#include "flexqp/solver.hpp"

#include <cstdint>
#include <string>

namespace flexqp {

// Problem file:
//   {"n","m","p","P":{"col_ptr","row_idx","val"},"q","G":{...},"h","A":{...},"b","name"}
// P holds upper-triangle entries only. Doubles are written with the
// shortest representation that round-trips exactly.

std::string problem_to_json(const QpProblem& prob, int indent = -1);
QpProblem problem_from_json(const std::string& text);
void save_problem(const QpProblem& prob, const std::string& path);
QpProblem load_problem(const std::string& path);

/// FNV-1a over the compact problem JSON.
std::uint64_t problem_hash(const QpProblem& prob);

// Warm-start envelope: {"problem": name, "hash": "<16 hex>", "state": {...}}.
std::string state_to_json(const QpProblem& prob, const SolverState& state);
/// Throws LoadError if the envelope was written for a different problem.
SolverState state_from_json(const QpProblem& prob, const std::string& text);
void save_state(const QpProblem& prob, const SolverState& state, const std::string& path);
SolverState load_state(const QpProblem& prob, const std::string& path);

std::string solution_to_json(const QpProblem& prob, const QpSolution& sol, double eps);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace flexqp
