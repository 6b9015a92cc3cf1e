#pragma once

#include <Eigen/Dense>

#include "iiekf/lie.hpp"

namespace iiekf {

/// Gaussian belief (mean, P) over a state space whose errors live in R^n.
/// For groups the mean is a GroupElement and the belief is the concentrated
/// Gaussian chi = mean * exp(xi), xi ~ N(0, P).
template <class Point>
struct Belief {
  Point mean;
  Eigen::MatrixXd cov;
};

using VectorBelief = Belief<Eigen::VectorXd>;
using GroupBelief = Belief<GroupElement>;

/// P = L L^T with L of full column rank r.
struct CovFactor {
  Eigen::MatrixXd L;
  int rank = 0;
};

/// How the gain is formed from P, H and the measurement noise.
struct GainMode {
  enum class Kind { Standard, NoiseFree, Regularized };
  Kind kind = Kind::Standard;
  double delta = 1e-5;

  static GainMode standard() { return {Kind::Standard, 0.0}; }
  static GainMode noise_free() { return {Kind::NoiseFree, 0.0}; }
  static GainMode regularized(double delta = 1e-5) { return {Kind::Regularized, delta}; }
};

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& P);

/// Rank-revealing factor via the symmetric eigendecomposition. Eigenvalues
/// below 1e-12 * lambda_max are dropped; throws NotPSD below -1e-10.
CovFactor factor(const Eigen::MatrixXd& P);

/// Numerical rank of a covariance, same threshold as factor().
int covariance_rank(const Eigen::MatrixXd& P);

/// Moore-Penrose pseudo-inverse, singular values below
/// max(max(rows, cols) * eps, rel_floor) * sigma_max treated as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double rel_floor = 0.0);

/// K = P H^T (H P H^T + N)^-1. Throws SingularInnovation when the innovation
/// covariance is singular or its condition number reaches 1e12.
Eigen::MatrixXd standard_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& N);

/// Zero-noise limit K = L (H L)^+. Always defined. H L is a computed product,
/// so structurally zero singular values come out at a few eps * sigma_max;
/// the cutoff is floored at 1e-12 * sigma_max to keep them from being inverted.
Eigen::MatrixXd noise_free_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H);
/// Same, with a precomputed factor of P.
Eigen::MatrixXd noise_free_gain(const CovFactor& f, const Eigen::MatrixXd& H);

/// K = P H^T (H P H^T + delta I)^-1, delta > 0.
Eigen::MatrixXd regularized_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H, double delta);

/// Dispatch on the gain mode. N is ignored by NoiseFree and Regularized,
/// which both treat the measurement as exact.
Eigen::MatrixXd compute_gain(const GainMode& mode, const Eigen::MatrixXd& P,
                             const Eigen::MatrixXd& H, const Eigen::MatrixXd& N);

/// P+ = (I - K H) P, symmetrized.
Eigen::MatrixXd riccati_update(const Eigen::MatrixXd& P, const Eigen::MatrixXd& K,
                               const Eigen::MatrixXd& H);

}  // namespace iiekf
