#pragma once

// Crane benchmark scenario definition and its JSON form.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iiekf/belief.hpp"
#include "iiekf/filters.hpp"

namespace iiekf::crane {

/// Piecewise-linear cable length, (time s, length m) knots in increasing
/// time. Constant extrapolation outside the knots.
struct CableProfile {
  std::vector<std::pair<double, double>> knots;

  double length(double t) const;
  /// Slope of the active segment (right derivative at knots).
  double rate(double t) const;
  void validate() const;
};

/// Spherical pendulum in azimuth/polar angles; theta is measured from the
/// downward vertical.
struct PendulumState {
  double phi = 0.0;
  double theta = 0.0;
  double phi_dot = 0.0;
  double theta_dot = 0.0;
  Eigen::Vector3d hang_point = Eigen::Vector3d::Zero();
};

struct ScenarioConfig {
  int scenario_id = 1;
  double duration = 2.5;  // s
  double rate = 100.0;    // Hz, IMU and filters
  Eigen::MatrixXd Q;      // 6x6, gyro then accel
  Eigen::MatrixXd N;      // 3x3
  Eigen::MatrixXd P0;     // 9x9, (rotation, velocity, position)
  int n_max = 50;
  double tol = 1e-7;
  GainMode gain_mode = GainMode::standard();
  int n_sims = 200;
  std::uint64_t seed = 0;
  CableProfile cable;
  PendulumState initial;
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  int substeps = 10;  // RK4 steps per IMU period for the truth

  double dt() const { return 1.0 / rate; }
  /// Number of measurement epochs k = 0..steps()-1.
  int steps() const;
  GNConfig gn() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Built-in scenarios 1-3.
ScenarioConfig default_scenario(int id);

/// Defaults for `id`, overridden by the keys present in `json_text`. A
/// "scenario_id" key in the text selects the defaults when id is 0.
ScenarioConfig parse_scenario_config(const std::string& json_text, int id = 0);
ScenarioConfig load_scenario_config(const std::string& path, int id = 0);

std::string scenario_config_json(const ScenarioConfig& cfg);

}  // namespace iiekf::crane
