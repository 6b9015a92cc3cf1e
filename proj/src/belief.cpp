#include "iiekf/belief.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "iiekf/errors.hpp"

namespace iiekf {

namespace {

constexpr double kPsdTolerance = -1e-10;
constexpr double kRankThreshold = 1e-12;
constexpr double kMaxCondition = 1e12;
constexpr double kGainRankFloor = 1e-12;

void check_gain_shapes(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H) {
  if (P.rows() != P.cols() || H.cols() != P.rows()) {
    throw DimensionMismatch("gain: P is " + std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                            ", H is " + std::to_string(H.rows()) + "x" + std::to_string(H.cols()));
  }
}

}  // namespace

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& P) {
  return 0.5 * (P + P.transpose());
}

CovFactor factor(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols()) throw DimensionMismatch("factor: covariance must be square");
  const Eigen::Index n = P.rows();
  CovFactor out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(P));
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  if (lambda(0) < kPsdTolerance) {
    throw NotPSD("factor: covariance has eigenvalue " + std::to_string(lambda(0)));
  }
  const double lmax = lambda(n - 1);
  if (lmax <= 0.0) {
    out.L = Eigen::MatrixXd::Zero(n, 0);
    return out;
  }
  const double cut = kRankThreshold * lmax;
  Eigen::Index first = 0;
  while (first < n && lambda(first) <= cut) ++first;
  const Eigen::Index r = n - first;
  out.L = eig.eigenvectors().rightCols(r) * lambda.tail(r).cwiseSqrt().asDiagonal();
  out.rank = static_cast<int>(r);
  return out;
}

int covariance_rank(const Eigen::MatrixXd& P) { return factor(P).rank; }

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double rel_floor) {
  if (A.size() == 0) return Eigen::MatrixXd::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double rel = std::max(static_cast<double>(std::max(A.rows(), A.cols())) *
                                  std::numeric_limits<double>::epsilon(),
                              rel_floor);
  const double tau = rel * (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd s_inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tau) s_inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd standard_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& N) {
  check_gain_shapes(P, H);
  if (N.rows() != H.rows() || N.cols() != H.rows()) {
    throw DimensionMismatch("standard_gain: N must be " + std::to_string(H.rows()) + "x" +
                            std::to_string(H.rows()));
  }
  const Eigen::MatrixXd PHt = P * H.transpose();
  const Eigen::MatrixXd S = symmetrize(H * PHt + N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin >= kMaxCondition) {
    throw SingularInnovation("innovation covariance is singular (eigenvalues in [" +
                             std::to_string(lmin) + ", " + std::to_string(lmax) + "])");
  }
  // K^T = S^-1 H P
  return S.ldlt().solve(PHt.transpose()).transpose();
}

Eigen::MatrixXd noise_free_gain(const CovFactor& f, const Eigen::MatrixXd& H) {
  if (H.cols() != f.L.rows()) throw DimensionMismatch("noise_free_gain: H and L disagree");
  return f.L * pseudo_inverse(H * f.L, kGainRankFloor);
}

Eigen::MatrixXd noise_free_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H) {
  check_gain_shapes(P, H);
  return noise_free_gain(factor(P), H);
}

Eigen::MatrixXd regularized_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H, double delta) {
  check_gain_shapes(P, H);
  if (!(delta > 0.0)) throw DimensionMismatch("regularized_gain: delta must be positive");
  const Eigen::MatrixXd PHt = P * H.transpose();
  const Eigen::MatrixXd S =
      symmetrize(H * PHt) + delta * Eigen::MatrixXd::Identity(H.rows(), H.rows());
  return S.ldlt().solve(PHt.transpose()).transpose();
}

Eigen::MatrixXd compute_gain(const GainMode& mode, const Eigen::MatrixXd& P,
                             const Eigen::MatrixXd& H, const Eigen::MatrixXd& N) {
  switch (mode.kind) {
    case GainMode::Kind::Standard:
      return standard_gain(P, H, N);
    case GainMode::Kind::NoiseFree:
      return noise_free_gain(P, H);
    case GainMode::Kind::Regularized:
      return regularized_gain(P, H, mode.delta);
  }
  return {};
}

Eigen::MatrixXd riccati_update(const Eigen::MatrixXd& P, const Eigen::MatrixXd& K,
                               const Eigen::MatrixXd& H) {
  if (K.rows() != P.rows() || K.cols() != H.rows() || H.cols() != P.rows()) {
    throw DimensionMismatch("riccati_update: incompatible shapes");
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  return symmetrize((I - K * H) * P);
}

}  // namespace iiekf
