#pragma once

// Systems of equations chi d_j = y_j on a matrix Lie group, solved by feeding
// each equation to the IIEKF as a noise-free measurement. Convergence is only
// local: the initial guess must be close enough to a solution.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iiekf/filters.hpp"
#include "iiekf/lie.hpp"

namespace iiekf {

enum class EquationForm {
  Left,   // chi d = y
  Right,  // chi^-1 d = y, rewritten as chi y = d
};

struct Equation {
  Eigen::VectorXd d;
  Eigen::VectorXd y;
};

struct EquationSystem {
  MatrixGroup group = MatrixGroup::so3();
  std::vector<Equation> equations;
  EquationForm form = EquationForm::Left;

  /// Equations in left form.
  std::vector<Equation> left_equations() const;
};

struct SolveResult {
  GroupElement solution;
  std::vector<double> residuals;  // |chi d_j - y_j| in left form
  int final_rank = 0;
  std::vector<int> rank_trace;    // rank(P) before and after each equation
  std::vector<UpdateReport> reports;
  std::vector<std::string> warnings;
};

/// Residual above which an equation counts as violated.
inline constexpr double kInconsistencyThreshold = 1e-6;

/// Sequential noise-free IIEKF updates, one per equation, no propagation in
/// between. Throws NotConverged(j) when equation j's Gauss-Newton loop hits
/// n_max, InconsistentSystem(j) when equation j or an earlier one is left
/// with a residual above kInconsistencyThreshold.
SolveResult solve(const EquationSystem& system, const GroupElement& initial, const Eigen::MatrixXd& P0,
                  const GNConfig& cfg = {});

struct LinearEquation {
  Eigen::MatrixXd H;  // rows of the system
  Eigen::VectorXd y;
};

/// Sequential noise-free KF updates on R^n.
Eigen::VectorXd solve_linear(const std::vector<LinearEquation>& system, const Eigen::VectorXd& initial,
                             const Eigen::MatrixXd& P0);

}  // namespace iiekf
