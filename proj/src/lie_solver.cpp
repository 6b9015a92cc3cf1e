#include "iiekf/lie_solver.hpp"

#include <sstream>

#include "iiekf/belief.hpp"
#include "iiekf/errors.hpp"

namespace iiekf {

namespace {

// Heuristic basin check: a first innovation larger than this suggests the
// initial guess may be outside the region where Gauss-Newton converges.
constexpr double kMaxInitialInnovation = 1.0;

void require_full_rank(const Eigen::MatrixXd& P0, Eigen::Index n) {
  if (P0.rows() != n || P0.cols() != n) {
    throw DimensionMismatch("initial covariance must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (covariance_rank(P0) != n) throw SingularCovariance("initial covariance must be full rank");
}

}  // namespace

std::vector<Equation> EquationSystem::left_equations() const {
  if (form == EquationForm::Left) return equations;
  std::vector<Equation> out;
  out.reserve(equations.size());
  for (const auto& e : equations) out.push_back({e.y, e.d});
  return out;
}

SolveResult solve(const EquationSystem& system, const GroupElement& initial, const Eigen::MatrixXd& P0,
                  const GNConfig& cfg) {
  if (initial.group() != system.group) throw DimensionMismatch("initial guess is not in the system's group");
  require_full_rank(P0, system.group.dim());
  const std::vector<Equation> eqs = system.left_equations();
  const Eigen::Index N = system.group.matrix_size();
  for (const auto& e : eqs) {
    if (e.d.size() != N || e.y.size() != N) {
      throw DimensionMismatch("equation vectors must have size " + std::to_string(N));
    }
  }

  GroupBelief belief{initial, P0};
  SolveResult result{initial, {}, 0, {covariance_rank(P0)}, {}, {}};
  for (std::size_t j = 0; j < eqs.size(); ++j) {
    auto step = iiekf_update_noise_free(belief, eqs[j].d, eqs[j].y, cfg);
    if (step.report.innovation.norm() > kMaxInitialInnovation) {
      std::ostringstream msg;
      msg << "equation " << j << ": first innovation norm " << step.report.innovation.norm()
          << " exceeds " << kMaxInitialInnovation << ", initial guess may be too far";
      result.warnings.push_back(msg.str());
    }
    belief = std::move(step.belief);
    result.reports.push_back(std::move(step.report));
    result.rank_trace.push_back(covariance_rank(belief.cov));

    for (std::size_t i = 0; i < j; ++i) {
      const double r = (belief.mean.act(eqs[i].d) - eqs[i].y).norm();
      if (r > kInconsistencyThreshold) {
        std::ostringstream msg;
        msg << "equation " << i << " residual " << r << " after processing equation " << j;
        throw InconsistentSystem(j, msg.str());
      }
    }
    if (!result.reports.back().converged) {
      throw NotConverged(j, "equation " + std::to_string(j) + ": Gauss-Newton did not converge in " +
                                std::to_string(cfg.n_max) + " iterations");
    }
    const double own = (belief.mean.act(eqs[j].d) - eqs[j].y).norm();
    if (own > kInconsistencyThreshold) {
      std::ostringstream msg;
      msg << "equation " << j << " cannot be met on the set left by earlier equations (residual " << own << ")";
      throw InconsistentSystem(j, msg.str());
    }
  }

  result.solution = belief.mean;
  for (const auto& e : eqs) result.residuals.push_back((belief.mean.act(e.d) - e.y).norm());
  result.final_rank = result.rank_trace.back();
  return result;
}

Eigen::VectorXd solve_linear(const std::vector<LinearEquation>& system, const Eigen::VectorXd& initial,
                             const Eigen::MatrixXd& P0) {
  require_full_rank(P0, initial.size());
  VectorBelief belief{initial, P0};
  for (const auto& eq : system) {
    if (eq.H.cols() != initial.size() || eq.H.rows() != eq.y.size()) {
      throw DimensionMismatch("linear equation shape does not match the state");
    }
    belief = kf_update(belief, eq.H, eq.y, {}, GainMode::noise_free()).belief;
  }
  for (std::size_t j = 0; j < system.size(); ++j) {
    const double r = (system[j].H * belief.mean - system[j].y).norm();
    if (r > kInconsistencyThreshold * (1.0 + system[j].y.norm())) {
      std::ostringstream msg;
      msg << "linear equation " << j << " residual " << r << " after all updates";
      throw InconsistentSystem(j, msg.str());
    }
  }
  return belief.mean;
}

}  // namespace iiekf
