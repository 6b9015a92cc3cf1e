#include "iiekf/crane.hpp"

#include <algorithm>
#include <cmath>

#include "iiekf/belief.hpp"
#include "iiekf/errors.hpp"

namespace iiekf::crane {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

GroupElement ExtendedPose::to_group() const {
  MatrixXd m = MatrixXd::Identity(5, 5);
  m.topLeftCorner<3, 3>() = R;
  m.block<3, 1>(0, 3) = v;
  m.block<3, 1>(0, 4) = p;
  return GroupElement(MatrixGroup::se23(), m);
}

ExtendedPose ExtendedPose::from_group(const GroupElement& g) {
  if (g.group().kind() != GroupKind::SE23) throw NotInGroup("extended pose needs an SE_2(3) element");
  validate(g);
  const MatrixXd& m = g.matrix();
  return {m.topLeftCorner<3, 3>(), m.block<3, 1>(0, 3), m.block<3, 1>(0, 4)};
}

VectorXd ImuSample::input() const {
  VectorXd u(6);
  u << omega, accel;
  return u;
}

ExtendedPose imu_propagate(const ExtendedPose& pose, const ImuSample& s, const VectorXd& w, const Vector3d& g) {
  if (w.size() != 6) throw DimensionMismatch("IMU noise must have 6 entries");
  const Vector3d omega = s.omega + w.head<3>();
  const Vector3d accel = s.accel + w.tail<3>();
  return {pose.R * so3::exp(omega * s.dt), pose.v + (pose.R * accel + g) * s.dt, pose.p + pose.v * s.dt};
}

// ------------------------------------------------------------------ truth

namespace {

struct Swing {
  Vector3d u;      // unit cable direction, hang point to hook
  Vector3d u_dot;
};

Swing derivative(const Swing& s, double l, double l_dot, const Vector3d& g) {
  const Vector3d u_ddot = (g - g.dot(s.u) * s.u - 2.0 * l_dot * s.u_dot) / l - s.u_dot.squaredNorm() * s.u;
  return {s.u_dot, u_ddot};
}

Swing axpy(const Swing& s, double h, const Swing& k) { return {s.u + h * k.u, s.u_dot + h * k.u_dot}; }

// Smallest rotation taking unit vector a onto unit vector b.
Matrix3d align(const Vector3d& a, const Vector3d& b) {
  const Vector3d axis = a.cross(b);
  const double s = axis.norm();
  if (s < 1e-15) return Matrix3d::Identity();
  return so3::exp(axis / s * std::atan2(s, a.dot(b)));
}

PendulumState angles(const Swing& s, const Vector3d& hang) {
  PendulumState st;
  st.hang_point = hang;
  st.theta = std::acos(std::clamp(-s.u.z(), -1.0, 1.0));
  st.phi = std::atan2(s.u.y(), s.u.x());
  const double sin_t = std::sin(st.theta);
  // u_z = -cos(theta) so d/dt u_z = sin(theta) theta_dot
  st.theta_dot = sin_t > 1e-12 ? s.u_dot.z() / sin_t : 0.0;
  const double rho2 = s.u.x() * s.u.x() + s.u.y() * s.u.y();
  st.phi_dot = rho2 > 1e-24 ? (s.u.x() * s.u_dot.y() - s.u.y() * s.u_dot.x()) / rho2 : 0.0;
  return st;
}

}  // namespace

TruthTrajectory simulate_truth(const ScenarioConfig& cfg) {
  cfg.validate();
  const int K = cfg.steps();
  const double dt = cfg.dt();
  const double h = dt / cfg.substeps;
  const PendulumState& ini = cfg.initial;
  const double ct = std::cos(ini.theta), st = std::sin(ini.theta);
  const double cp = std::cos(ini.phi), sp = std::sin(ini.phi);

  Swing s{{st * cp, st * sp, -ct},
          ini.theta_dot * Vector3d(ct * cp, ct * sp, st) + ini.phi_dot * Vector3d(-st * sp, st * cp, 0.0)};
  Matrix3d R;
  R.col(2) = -s.u;
  R.col(0) = Vector3d(ct * cp, ct * sp, st);
  R.col(1) = R.col(2).cross(R.col(0));

  // one extra sample so that v_{K-1} = (p_K - p_{K-1}) / dt is defined
  std::vector<Vector3d> positions;
  std::vector<Matrix3d> rotations;
  TruthTrajectory out;
  out.dt = dt;
  double t = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double l = cfg.cable.length(t);
    positions.push_back(ini.hang_point + l * s.u);
    rotations.push_back(R);
    if (k < K) {
      out.lengths.push_back(l);
      out.states.push_back(angles(s, ini.hang_point));
    }
    if (k == K) break;
    for (int j = 0; j < cfg.substeps; ++j) {
      // the profile is linear inside a substep when its knots sit on the grid
      const double l_dot = cfg.cable.rate(t + 0.5 * h);
      const double l0 = cfg.cable.length(t);
      const Swing k1 = derivative(s, l0, l_dot, cfg.gravity);
      const Swing k2 = derivative(axpy(s, 0.5 * h, k1), l0 + 0.5 * h * l_dot, l_dot, cfg.gravity);
      const Swing k3 = derivative(axpy(s, 0.5 * h, k2), l0 + 0.5 * h * l_dot, l_dot, cfg.gravity);
      const Swing k4 = derivative(axpy(s, h, k3), l0 + h * l_dot, l_dot, cfg.gravity);
      Swing next{s.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
                 s.u_dot + h / 6.0 * (k1.u_dot + 2.0 * k2.u_dot + 2.0 * k3.u_dot + k4.u_dot)};
      if (!next.u.allFinite() || !next.u_dot.allFinite() || std::abs(next.u.norm() - 1.0) > 1e-6) {
        throw IntegrationDiverged("pendulum integration left the unit sphere at t = " + std::to_string(t));
      }
      next.u.normalize();
      next.u_dot -= next.u.dot(next.u_dot) * next.u;
      // carry the body frame along without spinning it about the cable
      R = align(-s.u, -next.u) * R;
      s = next;
      t = (k * cfg.substeps + j + 1) * h;
    }
  }

  out.poses.reserve(K);
  for (int k = 0; k < K; ++k) {
    out.poses.push_back({rotations[k], (positions[k + 1] - positions[k]) / dt, positions[k]});
  }
  return out;
}

VectorXd sample_gaussian(const MatrixXd& cov, std::mt19937_64& rng) {
  const CovFactor f = factor(cov);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd eta(f.L.cols());
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = normal(rng);
  return f.L * eta;
}

std::vector<ImuSample> synthesize_imu(const std::vector<ExtendedPose>& poses, double dt, const MatrixXd& Q,
                                      std::mt19937_64& rng, const Vector3d& g) {
  if (!(dt > 0.0)) throw DimensionMismatch("IMU period must be positive");
  if (Q.rows() != 6 || Q.cols() != 6) throw DimensionMismatch("IMU noise covariance must be 6x6");
  std::vector<ImuSample> out;
  if (poses.size() < 2) return out;
  const CovFactor f = factor(Q);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.reserve(poses.size() - 1);
  for (std::size_t k = 0; k + 1 < poses.size(); ++k) {
    ImuSample s;
    s.dt = dt;
    s.omega = so3::log(poses[k].R.transpose() * poses[k + 1].R) / dt;
    s.accel = poses[k].R.transpose() * ((poses[k + 1].v - poses[k].v) / dt - g);
    if (f.rank > 0) {
      VectorXd eta(f.L.cols());
      for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = normal(rng);
      const VectorXd w = f.L * eta;
      s.omega += w.head<3>();
      s.accel += w.tail<3>();
    }
    out.push_back(s);
  }
  return out;
}

// ------------------------------------------------------------ measurement

Vector3d lever_arm(double l) { return {0.0, 0.0, l}; }

VectorXd measurement_direction(double l) {
  VectorXd d(5);
  d << lever_arm(l), 0.0, 1.0;
  return d;
}

Vector3d measure(const ExtendedPose& pose, double l) {
  if (!(l > 0.0)) throw DimensionMismatch("cable length must be positive");
  return pose.R * lever_arm(l) + pose.p;
}

Vector3d measure(const ExtendedPose& pose, double l, const MatrixXd& N, std::mt19937_64& rng) {
  return measure(pose, l) + sample_gaussian(N, rng);
}

VectorXd measure5(const Vector3d& y) {
  VectorXd out(5);
  out << y, 0.0, 1.0;
  return out;
}

// -------------------------------------------------------------- jacobians

Jacobians jacobians_ekf(const ExtendedPose& est, const ImuSample& s, double l) {
  const Matrix3d I = Matrix3d::Identity();
  const Vector3d wdt = s.omega * s.dt;
  const Matrix3d Omega = so3::exp(wdt);
  Jacobians j{MatrixXd::Zero(9, 9), MatrixXd::Zero(9, 6), MatrixXd::Zero(3, 9)};
  j.F.block<3, 3>(0, 0) = Omega.transpose();
  j.F.block<3, 3>(3, 0) = -est.R * so3::skew(s.accel) * s.dt;
  j.F.block<3, 3>(3, 3) = I;
  j.F.block<3, 3>(6, 3) = I * s.dt;
  j.F.block<3, 3>(6, 6) = I;
  j.G.block<3, 3>(0, 0) = so3::left_jacobian(-wdt) * s.dt;
  j.G.block<3, 3>(3, 3) = est.R * s.dt;
  j.H.block<3, 3>(0, 0) = -est.R * so3::skew(lever_arm(l));
  j.H.block<3, 3>(0, 6) = I;
  return j;
}

Jacobians jacobians_iekf(const ImuSample& s, double l) {
  const Vector3d wdt = s.omega * s.dt;
  const Matrix3d Ot = so3::exp(wdt).transpose();
  Jacobians j{MatrixXd::Zero(9, 9), MatrixXd::Zero(9, 6), MatrixXd::Zero(3, 9)};
  j.F.block<3, 3>(0, 0) = Ot;
  j.F.block<3, 3>(3, 0) = -Ot * so3::skew(s.accel) * s.dt;
  j.F.block<3, 3>(3, 3) = Ot;
  j.F.block<3, 3>(6, 3) = Ot * s.dt;
  j.F.block<3, 3>(6, 6) = Ot;
  j.G.block<3, 3>(0, 0) = so3::left_jacobian(-wdt) * s.dt;
  j.G.block<3, 3>(3, 3) = Ot * s.dt;
  j.H.block<3, 3>(0, 0) = -so3::skew(lever_arm(l));
  j.H.block<3, 3>(0, 6) = Matrix3d::Identity();
  return j;
}

// ----------------------------------------------------------- observability

int numeric_rank(const MatrixXd& A) {
  if (A.size() == 0) return 0;
  const Eigen::JacobiSVD<MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > 1e-9 * sv(0) ? 1 : 0;
  return r;
}

ObservabilityReport observability_matrix(const std::array<ImuSample, 2>& samples, const std::array<Vector3d, 3>& r) {
  const ImuSample& s2 = samples[0];  // k-2
  const ImuSample& s1 = samples[1];  // k-1
  const double dt = s1.dt;
  if (std::abs(s2.dt - dt) > 1e-12 * dt) throw DimensionMismatch("observability needs a constant IMU period");
  const Matrix3d I = Matrix3d::Identity();
  const Matrix3d O1 = so3::exp(s1.omega * dt);
  const Matrix3d O2 = so3::exp(s2.omega * dt);

  ObservabilityReport rep;
  rep.Phi = O2 * O1;
  rep.Psi = -so3::skew(r[1] + dt * dt * s1.accel) * O1;
  rep.Sigma = -rep.Phi * so3::skew(rep.Phi.transpose() * (r[0] + dt * dt * s2.accel) +
                                   2.0 * dt * dt * O1.transpose() * s1.accel);
  rep.O = MatrixXd::Zero(9, 9);
  rep.O.block<3, 3>(0, 0) = -so3::skew(r[2]);
  rep.O.block<3, 3>(0, 6) = I;
  rep.O.block<3, 3>(3, 0) = rep.Psi;
  rep.O.block<3, 3>(3, 3) = -dt * O1;
  rep.O.block<3, 3>(3, 6) = O1;
  rep.O.block<3, 3>(6, 0) = rep.Sigma;
  rep.O.block<3, 3>(6, 3) = -2.0 * dt * rep.Phi;
  rep.O.block<3, 3>(6, 6) = rep.Phi;
  rep.rank = numeric_rank(rep.O);

  // Phi^-1 row3 - 2 Omega_{k-1}^-1 row2 + row1 cancels the velocity and
  // position columns and leaves a single skew block.
  rep.O3 = rep.Phi.transpose() * rep.O.middleRows<3>(6) - 2.0 * O1.transpose() * rep.O.middleRows<3>(3) +
           rep.O.topRows<3>();
  rep.reduced_rank = numeric_rank(rep.O3);
  // the bracketed vector can vanish exactly; a relative cutoff would then
  // count round-off as rank
  if (rep.O3.norm() <= 1e-12 * rep.O.norm()) rep.reduced_rank = 0;
  return rep;
}

double cable_length(const ScenarioConfig& cfg, int k) {
  if (k < 0 || k >= cfg.steps()) throw DimensionMismatch("epoch outside the scenario horizon");
  return cfg.cable.length(k * cfg.dt());
}

// ------------------------------------------------------------ filter models

ExtendedPose ekf_retract(const ExtendedPose& x, const VectorXd& e) {
  return {x.R * so3::exp(e.head<3>()), x.v + e.segment<3>(3), x.p + e.tail<3>()};
}

NonlinearModel<ExtendedPose> ekf_model(const ScenarioConfig& cfg, double l) {
  const double dt = cfg.dt();
  const Vector3d g = cfg.gravity;
  auto sample = [dt](const VectorXd& u) { return ImuSample{u.head<3>(), u.tail<3>(), dt}; };
  NonlinearModel<ExtendedPose> m;
  m.f = [sample, g](const ExtendedPose& x, const VectorXd& u) {
    return imu_propagate(x, sample(u), VectorXd::Zero(6), g);
  };
  m.jac_f = [sample, l](const ExtendedPose& x, const VectorXd& u) { return jacobians_ekf(x, sample(u), l).F; };
  m.jac_g = [sample, l](const ExtendedPose& x, const VectorXd& u) { return jacobians_ekf(x, sample(u), l).G; };
  m.Q = cfg.Q;
  m.h = [l](const ExtendedPose& x) -> VectorXd { return measure(x, l); };
  m.jac_h = [l](const ExtendedPose& x) -> MatrixXd {
    MatrixXd H = MatrixXd::Zero(3, 9);
    H.leftCols<3>() = -x.R * so3::skew(lever_arm(l));
    H.rightCols<3>() = Matrix3d::Identity();
    return H;
  };
  m.N = cfg.N;
  m.retract = ekf_retract;
  m.retract_jacobian = [](const VectorXd& e) -> MatrixXd {
    MatrixXd M = MatrixXd::Identity(9, 9);
    M.topLeftCorner<3, 3>() = so3::right_jacobian(e.head<3>());
    return M;
  };
  return m;
}

InvariantModel iekf_model(const ScenarioConfig& cfg) {
  const double dt = cfg.dt();
  const Vector3d g = cfg.gravity;
  auto sample = [dt](const VectorXd& u) { return ImuSample{u.head<3>(), u.tail<3>(), dt}; };
  InvariantModel m;
  m.f = [sample, g](const GroupElement& chi, const VectorXd& u) {
    const MatrixXd& a = chi.matrix();
    const ExtendedPose x{a.topLeftCorner<3, 3>(), a.block<3, 1>(0, 3), a.block<3, 1>(0, 4)};
    return imu_propagate(x, sample(u), VectorXd::Zero(6), g).to_group();
  };
  // the cable length does not enter F or G
  m.jac_f = [sample](const VectorXd& u) { return jacobians_iekf(sample(u), 1.0).F; };
  m.jac_g = [sample](const VectorXd& u) { return jacobians_iekf(sample(u), 1.0).G; };
  m.Q = cfg.Q;
  return m;
}

}  // namespace iiekf::crane
