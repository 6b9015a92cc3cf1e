#include "iiekf/filters.hpp"

#include <limits>
#include <string>

namespace iiekf {

void GNConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("GN tolerance must be positive");
  if (n_max < 1) throw ConfigError("GN iteration cap must be at least 1");
  if (gain_mode.kind == GainMode::Kind::Regularized && !(gain_mode.delta > 0.0)) {
    throw ConfigError("regularized gain needs delta > 0");
  }
}

VectorBelief kf_predict(const VectorBelief& belief, const LinearModel& model, const Eigen::VectorXd& u) {
  if (model.F.cols() != belief.mean.size()) throw DimensionMismatch("kf_predict: F and state disagree");
  Eigen::VectorXd x = model.F * belief.mean;
  if (model.B.size() > 0) x += model.B * u;
  Eigen::MatrixXd P = model.F * belief.cov * model.F.transpose();
  if (model.Q.size() > 0) P += model.Q;
  return {x, symmetrize(P)};
}

UpdateResult<VectorBelief> kf_update(const VectorBelief& belief, const Eigen::MatrixXd& H,
                                     const Eigen::VectorXd& y, const Eigen::MatrixXd& N,
                                     const GainMode& mode) {
  if (H.rows() != y.size()) throw DimensionMismatch("kf_update: H and y disagree");
  const Eigen::VectorXd z = y - H * belief.mean;
  const Eigen::MatrixXd K = compute_gain(mode, belief.cov, H, N);
  UpdateResult<VectorBelief> out{{belief.mean + K * z, riccati_update(belief.cov, K, H)}, {}};
  out.report.iterations = 1;
  out.report.innovation = z;
  return out;
}

GroupBelief iekf_predict(const GroupBelief& belief, const InvariantModel& model, const Eigen::VectorXd& u) {
  const Eigen::MatrixXd F = model.jac_f(u);
  Eigen::MatrixXd P = F * belief.cov * F.transpose();
  if (model.Q.size() > 0) {
    const Eigen::MatrixXd G = model.jac_g ? model.jac_g(u)
                                          : Eigen::MatrixXd::Identity(P.rows(), model.Q.rows());
    P += G * model.Q * G.transpose();
  }
  return {model.f(belief.mean, u), symmetrize(P)};
}

Eigen::MatrixXd invariant_output_jacobian(const MatrixGroup& group, const Eigen::VectorXd& d) {
  if (d.size() != group.matrix_size()) {
    throw DimensionMismatch("output jacobian: d has size " + std::to_string(d.size()) + ", expected " +
                            std::to_string(group.matrix_size()));
  }
  const int n = group.dim();
  Eigen::MatrixXd H(group.matrix_size(), n);
  for (int j = 0; j < n; ++j) H.col(j) = group.hat(Eigen::VectorXd::Unit(n, j)) * d;
  return H;
}

Eigen::MatrixXd invariant_noise(const GroupElement& estimate, const Eigen::MatrixXd& N) {
  const MatrixGroup& g = estimate.group();
  const int m = g.informative_rows();
  if (N.rows() != m || N.cols() != m) {
    throw DimensionMismatch("measurement noise must be " + std::to_string(m) + "x" + std::to_string(m));
  }
  if (g.kind() == GroupKind::Generic) {
    const Eigen::MatrixXd inv = estimate.inverse().matrix();
    return symmetrize(inv * N * inv.transpose());
  }
  const Eigen::Matrix3d R = estimate.rotation();
  return symmetrize(R.transpose() * N * R);
}

namespace {

// Gain for one linearization, with the factor of P shared across iterations.
class GainRule {
 public:
  GainRule(const GainMode& mode, const Eigen::MatrixXd& P, Eigen::MatrixXd N_hat)
      : mode_(mode), P_(P), N_hat_(std::move(N_hat)) {
    if (mode_.kind == GainMode::Kind::NoiseFree) factor_ = factor(P);
  }

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& H) const {
    switch (mode_.kind) {
      case GainMode::Kind::Standard:
        return standard_gain(P_, H, N_hat_);
      case GainMode::Kind::NoiseFree:
        return noise_free_gain(factor_, H);
      case GainMode::Kind::Regularized:
        return regularized_gain(P_, H, mode_.delta);
    }
    return {};
  }

 private:
  GainMode mode_;
  const Eigen::MatrixXd& P_;
  Eigen::MatrixXd N_hat_;
  CovFactor factor_;
};

}  // namespace

UpdateResult<GroupBelief> iiekf_update(const GroupBelief& belief, const InvariantMeasurement& meas,
                                       const GNConfig& cfg) {
  cfg.validate();
  const GroupElement& mean = belief.mean;
  const MatrixGroup& group = mean.group();
  const Eigen::MatrixXd& P = belief.cov;
  const Eigen::Index n = group.dim();
  const Eigen::Index m = group.informative_rows();
  if (P.rows() != n || P.cols() != n) throw DimensionMismatch("iiekf_update: covariance shape");
  if (meas.d.size() != group.matrix_size() || meas.y.size() != group.matrix_size()) {
    throw DimensionMismatch("iiekf_update: d and y must have the matrix size of the group");
  }

  const Eigen::MatrixXd H_full = invariant_output_jacobian(group, meas.d);
  const Eigen::MatrixXd H = H_full.topRows(m);
  const Eigen::VectorXd z_full = mean.inverse().matrix() * meas.y - meas.d;
  Eigen::MatrixXd N_hat;
  if (cfg.gain_mode.kind == GainMode::Kind::Standard) N_hat = invariant_noise(mean, meas.N);
  const GainRule gain(cfg.gain_mode, P, N_hat);

  UpdateReport report;
  report.innovation = z_full.head(m);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
  double delta = std::numeric_limits<double>::infinity();
  while (delta > cfg.tol && report.iterations < cfg.n_max) {
    const Eigen::MatrixXd E = group.exp(xi).matrix();
    const Eigen::MatrixXd Hi = (E * H_full * group.right_jacobian(xi)).topRows(m);
    const Eigen::VectorXd zi = (z_full + meas.d - E * meas.d).head(m) + Hi * xi;
    const Eigen::VectorXd next = gain(Hi) * zi;
    if (!next.allFinite()) throw NonFinite("IIEKF produced a non-finite iterate");
    delta = (next - xi).norm();
    xi = next;
    ++report.iterations;
    if (cfg.record_iterates) report.iterates.push_back(xi);
  }
  report.converged = delta <= cfg.tol;
  report.final_step_norm = delta;

  const Eigen::MatrixXd K = gain(H);
  return {{mean * group.exp(xi), riccati_update(P, K, H)}, report};
}

UpdateResult<GroupBelief> iiekf_update_noise_free(const GroupBelief& belief, const Eigen::VectorXd& d,
                                                  const Eigen::VectorXd& y, const GNConfig& cfg) {
  GNConfig nf = cfg;
  nf.gain_mode = GainMode::noise_free();
  return iiekf_update(belief, {d, y, Eigen::MatrixXd()}, nf);
}

UpdateResult<GroupBelief> iekf_update(const GroupBelief& belief, const InvariantMeasurement& meas, GainMode mode) {
  GNConfig cfg;
  cfg.n_max = 1;
  cfg.gain_mode = mode;
  auto out = iiekf_update(belief, meas, cfg);
  out.report.converged = true;
  return out;
}

Compatibility check_compatibility(const GroupBelief& belief, const Eigen::VectorXd& d, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd H = invariant_output_jacobian(belief.mean.group(), d);
  return {(belief.mean.act(d) - y).norm(), (H * belief.cov * H.transpose()).norm()};
}

}  // namespace iiekf
