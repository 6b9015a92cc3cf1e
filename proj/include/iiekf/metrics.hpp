#pragma once

// Error norms and consistency statistics for the Monte Carlo runs.

#include <vector>

#include <Eigen/Dense>

#include "iiekf/crane.hpp"
#include "iiekf/lie.hpp"

namespace iiekf {

/// log(est^-1 truth). Throws AngleNearPi.
Tangent invariant_error(const GroupElement& est, const GroupElement& truth);

/// (log(R_hat^T R), v - v_hat, p - p_hat). Throws AngleNearPi.
Eigen::VectorXd ekf_error(const crane::ExtendedPose& est, const crane::ExtendedPose& truth);

struct Nees {
  double value = 0.0;
  int n_dof = 0;  // rank of the covariance
};

/// e^T P^+ e with P^+ the pseudo-inverse, so only im(P) is weighted.
Nees nees(const Eigen::VectorXd& e, const Eigen::MatrixXd& P);

struct Anees {
  double value = 0.0;
  int n_dof = 0;  // most frequent covariance rank across the samples
};

/// Mean of the per-sample NEES, each with its own covariance. Throws
/// SingularCovariance when a covariance is zero.
Anees anees(const std::vector<Eigen::VectorXd>& errors, const std::vector<Eigen::MatrixXd>& covs);

struct AneesInterval {
  double r1 = 0.0;
  double r2 = 0.0;
  int n_sims = 0;
  int n_dof = 0;
};

/// Inverse CDF of the chi-square law with k degrees of freedom, found by a
/// bracketed root search on the regularized lower incomplete gamma function.
double chi2_quantile(double p, double k);
double chi2_cdf(double x, double k);

/// Two-sided 95% interval of the ANEES of n_sims consistent samples.
AneesInterval chi2_interval(int n_sims, int n_dof, double confidence = 0.95);

}  // namespace iiekf
