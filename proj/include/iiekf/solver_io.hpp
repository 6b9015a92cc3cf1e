#pragma once

// JSON front end for the equation solvers.
//
// {
//   "group": "so3" | "se3" | "se23" | "linear",
//   "form": "left" | "right",                 optional, group systems only
//   "equations": [{"d": [...], "y": [...]}]   or [{"H": [[...]], "y": [...]}] for linear
//   "initial": {"exp": [...]} | [[...]] | [...],   optional, identity / zero
//   "P0": {"diag": [...]} | [[...]],               optional, identity
//   "tol": 1e-10, "n_max": 50                      optional
// }

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iiekf/lie_solver.hpp"

namespace iiekf {

struct SolverSpec {
  std::string group_name;
  std::optional<EquationSystem> system;        // group systems
  std::optional<GroupElement> initial;
  std::vector<LinearEquation> linear;          // group_name == "linear"
  Eigen::VectorXd linear_initial;
  Eigen::MatrixXd P0;
  GNConfig cfg;

  bool is_linear() const { return group_name == "linear"; }
};

/// Throws ConfigError on malformed input.
SolverSpec parse_solver_spec(const std::string& json_text);
SolverSpec load_solver_spec(const std::filesystem::path& path);

struct SolverOutcome {
  enum class Status { Solved, Inconsistent, NotConverged };
  Status status = Status::Solved;
  std::string message;
  std::string report_json;
};

/// Solves and renders the report; solver failures are reported, not thrown.
SolverOutcome run_solver(const SolverSpec& spec);

}  // namespace iiekf
