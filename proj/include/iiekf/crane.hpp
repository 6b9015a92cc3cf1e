#pragma once

// Crane hook carrying an IMU, hanging from a cable of known length. The hook
// state is an extended pose; the only measurement is the hang point,
// y = R r + p with r = (0, 0, l) in the body frame.

#include <array>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "iiekf/filters.hpp"
#include "iiekf/lie.hpp"
#include "iiekf/scenario_config.hpp"

namespace iiekf::crane {

inline const Eigen::Vector3d kGravity{0.0, 0.0, -9.81};

struct ExtendedPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // body to world
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  GroupElement to_group() const;
  /// Throws NotInGroup unless g is a valid SE_2(3) element.
  static ExtendedPose from_group(const GroupElement& g);
};

struct ImuSample {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // rad/s, body
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // specific force, body
  double dt = 0.01;

  /// (omega, accel) stacked, the input vector of the filter models.
  Eigen::VectorXd input() const;
};

/// One Euler step of the flat-Earth IMU kinematics. w = (gyro, accel) noise.
ExtendedPose imu_propagate(const ExtendedPose& pose, const ImuSample& sample,
                           const Eigen::VectorXd& w = Eigen::VectorXd::Zero(6),
                           const Eigen::Vector3d& g = kGravity);

struct TruthTrajectory {
  double dt = 0.01;
  std::vector<double> lengths;          // l_k
  std::vector<PendulumState> states;    // angles recovered from the cable direction
  std::vector<ExtendedPose> poses;      // v_k = (p_{k+1} - p_k) / dt
};

/// Pendulum with time-varying length about the hang point, integrated with
/// RK4 on the cable unit vector. Body z points from the hook to the hang
/// point. Returns cfg.steps() epochs. Throws IntegrationDiverged.
TruthTrajectory simulate_truth(const ScenarioConfig& cfg);

/// Inverse of imu_propagate over consecutive poses, plus N(0, Q) noise.
/// Returns poses.size() - 1 samples.
std::vector<ImuSample> synthesize_imu(const std::vector<ExtendedPose>& poses, double dt, const Eigen::MatrixXd& Q,
                                      std::mt19937_64& rng, const Eigen::Vector3d& g = kGravity);

/// Sample of N(0, cov) through factor(cov); cov may be singular.
Eigen::VectorXd sample_gaussian(const Eigen::MatrixXd& cov, std::mt19937_64& rng);

Eigen::Vector3d lever_arm(double l);
/// d = (r, 0, 1).
Eigen::VectorXd measurement_direction(double l);

Eigen::Vector3d measure(const ExtendedPose& pose, double l);
Eigen::Vector3d measure(const ExtendedPose& pose, double l, const Eigen::MatrixXd& N, std::mt19937_64& rng);
/// (y, 0, 1).
Eigen::VectorXd measure5(const Eigen::Vector3d& y);

struct Jacobians {
  Eigen::MatrixXd F;  // 9x9
  Eigen::MatrixXd G;  // 9x6
  Eigen::MatrixXd H;  // 3x9
};

/// Error (log(R_hat^T R), v - v_hat, p - p_hat).
Jacobians jacobians_ekf(const ExtendedPose& estimate, const ImuSample& sample, double l);
/// Left-invariant error log(chi_hat^-1 chi); independent of the estimate.
Jacobians jacobians_iekf(const ImuSample& sample, double l);

struct ObservabilityReport {
  Eigen::MatrixXd O;       // 9x9
  int rank = 0;
  Eigen::Matrix3d Psi, Phi, Sigma;
  Eigen::MatrixXd O3;      // 3x9, third block row after eliminating the velocity and position columns
  int reduced_rank = 0;
};

/// Observability of the invariant error at time k from the measurements at
/// k-2, k-1, k. samples = {u_{k-2}, u_{k-1}}, r = {r_{k-2}, r_{k-1}, r_k}.
ObservabilityReport observability_matrix(const std::array<ImuSample, 2>& samples,
                                         const std::array<Eigen::Vector3d, 3>& r);

/// Numeric rank with singular values below 1e-9 * sigma_max dropped.
int numeric_rank(const Eigen::MatrixXd& A);

double cable_length(const ScenarioConfig& cfg, int k);

/// EKF on ExtendedPose with the input u = (omega, accel) and the cable
/// length l of the epoch being updated.
NonlinearModel<ExtendedPose> ekf_model(const ScenarioConfig& cfg, double l);
InvariantModel iekf_model(const ScenarioConfig& cfg);

/// Retraction used by the EKF: (R exp(e_R), v + e_v, p + e_p).
ExtendedPose ekf_retract(const ExtendedPose& x, const Eigen::VectorXd& e);

}  // namespace iiekf::crane
