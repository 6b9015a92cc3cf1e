#pragma once

// Kalman filters on vector spaces and matrix Lie groups: linear KF, EKF,
// iterated EKF (Gauss-Newton), left-invariant EKF and its iterated variant.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "iiekf/belief.hpp"
#include "iiekf/errors.hpp"
#include "iiekf/lie.hpp"

namespace iiekf {

struct GNConfig {
  double tol = 1e-7;
  int n_max = 50;
  GainMode gain_mode = GainMode::standard();
  /// Keep every iterate in UpdateReport::iterates.
  bool record_iterates = false;

  void validate() const;
};

struct UpdateReport {
  int iterations = 0;
  bool converged = true;
  double final_step_norm = 0.0;
  Eigen::VectorXd innovation;
  /// xi^1, xi^2, ... when GNConfig::record_iterates is set.
  std::vector<Eigen::VectorXd> iterates;
};

template <class B>
struct UpdateResult {
  B belief;
  UpdateReport report;
};

// ---------------------------------------------------------------- linear KF

struct LinearModel {
  Eigen::MatrixXd F, B, H, Q, N;
};

VectorBelief kf_predict(const VectorBelief& belief, const LinearModel& model, const Eigen::VectorXd& u);

UpdateResult<VectorBelief> kf_update(const VectorBelief& belief, const Eigen::MatrixXd& H,
                                     const Eigen::VectorXd& y, const Eigen::MatrixXd& N,
                                     const GainMode& mode);

// --------------------------------------------------------- EKF / IterEKF

/// Nonlinear model in error-state form. The estimation error e lives in R^n
/// and maps to a state through retract(x_hat, e); for vector states the
/// default is x_hat + e. jac_h is taken with respect to the error at its
/// argument and retract_jacobian(e) is d(local error at retract(x_hat, e))/de.
template <class State>
struct NonlinearModel {
  std::function<State(const State&, const Eigen::VectorXd&)> f;
  std::function<Eigen::MatrixXd(const State&, const Eigen::VectorXd&)> jac_f;
  std::function<Eigen::MatrixXd(const State&, const Eigen::VectorXd&)> jac_g;
  Eigen::MatrixXd Q;

  std::function<Eigen::VectorXd(const State&)> h;
  std::function<Eigen::MatrixXd(const State&)> jac_h;
  Eigen::MatrixXd N;

  std::function<State(const State&, const Eigen::VectorXd&)> retract;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> retract_jacobian;
};

namespace detail {

template <class State>
State retract(const NonlinearModel<State>& model, const State& x, const Eigen::VectorXd& e) {
  if (model.retract) return model.retract(x, e);
  if constexpr (std::is_same_v<State, Eigen::VectorXd>) {
    return x + e;
  } else {
    throw DimensionMismatch("nonlinear model needs a retraction for non-vector states");
  }
}

template <class State>
Eigen::MatrixXd retract_jacobian(const NonlinearModel<State>& model, const Eigen::VectorXd& e) {
  if (model.retract_jacobian) return model.retract_jacobian(e);
  return Eigen::MatrixXd::Identity(e.size(), e.size());
}

}  // namespace detail

template <class State>
Belief<State> ekf_predict(const Belief<State>& belief, const NonlinearModel<State>& model,
                          const Eigen::VectorXd& u) {
  const Eigen::MatrixXd F = model.jac_f(belief.mean, u);
  Eigen::MatrixXd P = F * belief.cov * F.transpose();
  if (model.Q.size() > 0) {
    const Eigen::MatrixXd G = model.jac_g ? model.jac_g(belief.mean, u)
                                          : Eigen::MatrixXd::Identity(P.rows(), model.Q.rows());
    P += G * model.Q * G.transpose();
  }
  return {model.f(belief.mean, u), symmetrize(P)};
}

/// Gauss-Newton iterated EKF in error coordinates:
///   x^i = retract(x_hat, e^i),  H^i = jac_h(x^i) M(e^i),
///   e^{i+1} = K^i (y - h(x^i) + H^i e^i).
/// The covariance update uses the gain and Jacobian of the last step taken.
template <class State>
UpdateResult<Belief<State>> iterekf_update(const Belief<State>& belief, const NonlinearModel<State>& model,
                                           const Eigen::VectorXd& y, const GNConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd& P = belief.cov;
  const Eigen::Index n = P.rows();
  UpdateReport report;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd K, H;
  double delta = std::numeric_limits<double>::infinity();
  while (delta > cfg.tol && report.iterations < cfg.n_max) {
    const State xi = detail::retract(model, belief.mean, e);
    H = model.jac_h(xi) * detail::retract_jacobian(model, e);
    const Eigen::VectorXd r = y - model.h(xi);
    if (report.iterations == 0) report.innovation = r;
    K = compute_gain(cfg.gain_mode, P, H, model.N);
    const Eigen::VectorXd next = K * (r + H * e);
    if (!next.allFinite()) throw NonFinite("iterated EKF produced a non-finite iterate");
    delta = (next - e).norm();
    e = next;
    ++report.iterations;
    if (cfg.record_iterates) report.iterates.push_back(e);
  }
  report.converged = delta <= cfg.tol;
  report.final_step_norm = delta;
  return {{detail::retract(model, belief.mean, e), riccati_update(P, K, H)}, report};
}

/// Single linearization; identical to iterekf_update with n_max = 1.
template <class State>
UpdateResult<Belief<State>> ekf_update(const Belief<State>& belief, const NonlinearModel<State>& model,
                                       const Eigen::VectorXd& y, GainMode mode = GainMode::standard()) {
  GNConfig cfg;
  cfg.n_max = 1;
  cfg.gain_mode = mode;
  auto out = iterekf_update(belief, model, y, cfg);
  out.report.converged = true;
  return out;
}

// ------------------------------------------------------- invariant filters

/// chi_{k+1} = f(chi_k, u_k) exp(w_k); xi_{k+1} = F xi_k + G w_k.
struct InvariantModel {
  std::function<GroupElement(const GroupElement&, const Eigen::VectorXd&)> f;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac_f;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac_g;
  Eigen::MatrixXd Q;
};

/// Left-invariant measurement y = chi d + n. N is the covariance of n on the
/// informative rows (3x3 for SO3/SE3/SE23, full for generic groups).
struct InvariantMeasurement {
  Eigen::VectorXd d;
  Eigen::VectorXd y;
  Eigen::MatrixXd N;
};

GroupBelief iekf_predict(const GroupBelief& belief, const InvariantModel& model, const Eigen::VectorXd& u);

/// H with H xi = hat(xi) d, all N rows. Does not depend on the estimate.
Eigen::MatrixXd invariant_output_jacobian(const MatrixGroup& group, const Eigen::VectorXd& d);

/// Noise covariance seen in the error frame, chi_hat^-1 N chi_hat^-T, on the
/// informative rows.
Eigen::MatrixXd invariant_noise(const GroupElement& estimate, const Eigen::MatrixXd& N);

/// Iterated invariant EKF update. Gauss-Newton on the linearized invariant
/// error, then a single Riccati step with the iteration-free gain.
UpdateResult<GroupBelief> iiekf_update(const GroupBelief& belief, const InvariantMeasurement& meas,
                                       const GNConfig& cfg);

/// Same with the zero-noise limit gain K = L (H L)^+ throughout.
UpdateResult<GroupBelief> iiekf_update_noise_free(const GroupBelief& belief, const Eigen::VectorXd& d,
                                                  const Eigen::VectorXd& y, const GNConfig& cfg);

/// Plain invariant EKF update (one iteration).
UpdateResult<GroupBelief> iekf_update(const GroupBelief& belief, const InvariantMeasurement& meas,
                                      GainMode mode = GainMode::standard());

struct Compatibility {
  double residual = 0.0;        // |chi_hat d - y|
  double projected_cov = 0.0;   // |H P H^T|_F
};

Compatibility check_compatibility(const GroupBelief& belief, const Eigen::VectorXd& d, const Eigen::VectorXd& y);

}  // namespace iiekf
