#include "iiekf/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <map>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "iiekf/belief.hpp"
#include "iiekf/errors.hpp"

namespace iiekf {

Tangent invariant_error(const GroupElement& est, const GroupElement& truth) {
  if (est.group() != truth.group()) throw DimensionMismatch("invariant error needs elements of one group");
  return est.group().log(est.inverse() * truth);
}

Eigen::VectorXd ekf_error(const crane::ExtendedPose& est, const crane::ExtendedPose& truth) {
  Eigen::VectorXd e(9);
  e << so3::log(est.R.transpose() * truth.R), truth.v - est.v, truth.p - est.p;
  return e;
}

Nees nees(const Eigen::VectorXd& e, const Eigen::MatrixXd& P) {
  if (P.rows() != e.size() || P.cols() != e.size()) throw DimensionMismatch("NEES: covariance does not match the error");
  const CovFactor f = factor(P);
  if (f.rank == 0) return {0.0, 0};
  // P = L L^T with L of full column rank, so e^T P^+ e = |L^+ e|^2
  const Eigen::VectorXd w = f.L.completeOrthogonalDecomposition().solve(e);
  return {w.squaredNorm(), f.rank};
}

Anees anees(const std::vector<Eigen::VectorXd>& errors, const std::vector<Eigen::MatrixXd>& covs) {
  if (errors.size() != covs.size()) throw DimensionMismatch("ANEES: one covariance per error is needed");
  if (errors.empty()) throw DimensionMismatch("ANEES of an empty sample");
  double sum = 0.0;
  std::map<int, int> ranks;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const Nees n = nees(errors[i], covs[i]);
    if (n.n_dof == 0) throw SingularCovariance("ANEES: zero covariance for sample " + std::to_string(i));
    sum += n.value;
    ++ranks[n.n_dof];
  }
  int best = 0, count = -1;
  for (const auto& [r, c] : ranks) {
    if (c > count) best = r, count = c;
  }
  return {sum / static_cast<double>(errors.size()), best};
}

double chi2_cdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

double chi2_quantile(double p, double k) {
  if (!(p > 0.0 && p < 1.0) || !(k > 0.0)) throw DimensionMismatch("chi-square quantile needs 0 < p < 1 and k > 0");
  auto f = [p, k](double x) { return chi2_cdf(x, k) - p; };
  double hi = k + 10.0 * std::sqrt(2.0 * k) + 10.0;
  while (f(hi) < 0.0) hi *= 2.0;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, -p, f(hi),
                                                        boost::math::tools::eps_tolerance<double>(40), max_iter);
  return 0.5 * (a + b);
}

AneesInterval chi2_interval(int n_sims, int n_dof, double confidence) {
  if (n_sims < 1 || n_dof < 1) throw DimensionMismatch("chi-square interval needs positive counts");
  const double k = static_cast<double>(n_sims) * n_dof;
  const double tail = 0.5 * (1.0 - confidence);
  return {chi2_quantile(tail, k) / n_sims, chi2_quantile(1.0 - tail, k) / n_sims, n_sims, n_dof};
}

}  // namespace iiekf
