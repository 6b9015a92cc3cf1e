#include "iiekf/scenario_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iiekf/errors.hpp"

namespace iiekf::crane {

using nlohmann::json;

double CableProfile::length(double t) const {
  if (knots.empty()) throw ConfigError("cable profile has no knots");
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double x, const std::pair<double, double>& k) { return x < k.first; });
  auto lo = hi - 1;
  const double s = (t - lo->first) / (hi->first - lo->first);
  return lo->second + s * (hi->second - lo->second);
}

double CableProfile::rate(double t) const {
  if (knots.size() < 2 || t < knots.front().first || t >= knots.back().first) return 0.0;
  auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double x, const std::pair<double, double>& k) { return x < k.first; });
  auto lo = hi - 1;
  return (hi->second - lo->second) / (hi->first - lo->first);
}

void CableProfile::validate() const {
  if (knots.empty()) throw ConfigError("cable profile needs at least one knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i].second > 0.0)) throw ConfigError("cable length must be positive");
    if (i > 0 && !(knots[i].first > knots[i - 1].first)) {
      throw ConfigError("cable profile times must be strictly increasing");
    }
  }
}

int ScenarioConfig::steps() const { return static_cast<int>(std::lround(duration * rate)); }

GNConfig ScenarioConfig::gn() const {
  GNConfig cfg;
  cfg.tol = tol;
  cfg.n_max = n_max;
  cfg.gain_mode = gain_mode;
  return cfg;
}

namespace {

void check_psd(const Eigen::MatrixXd& m, int n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw ConfigError(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm())) throw ConfigError(std::string(name) + " must be symmetric");
  try {
    factor(m);
  } catch (const NotPSD&) {
    throw ConfigError(std::string(name) + " must be positive semi-definite");
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (scenario_id < 1 || scenario_id > 3) throw ConfigError("scenario id must be 1, 2 or 3");
  if (!(rate > 0.0)) throw ConfigError("rate must be positive");
  if (!(duration > 0.0) || steps() < 2) throw ConfigError("duration must cover at least two epochs");
  if (n_sims < 1) throw ConfigError("n_sims must be at least 1");
  if (substeps < 1) throw ConfigError("substeps must be at least 1");
  check_psd(Q, 6, "Q");
  check_psd(N, 3, "N");
  check_psd(P0, 9, "P0");
  gn().validate();
  if (gain_mode.kind == GainMode::Kind::Standard && covariance_rank(N) < 3) {
    throw ConfigError("standard gain needs a full-rank N; use the regularized or noise-free gain");
  }
  cable.validate();
  if (!(initial.theta > 0.0 && initial.theta < std::numbers::pi)) {
    throw ConfigError("initial polar angle must lie in (0, pi)");
  }
}

ScenarioConfig default_scenario(int id) {
  if (id < 1 || id > 3) throw ConfigError("scenario id must be 1, 2 or 3");
  ScenarioConfig cfg;
  cfg.scenario_id = id;
  Eigen::VectorXd q(6);
  q << Eigen::Vector3d::Constant(0.017 * 0.017), Eigen::Vector3d::Constant(0.1 * 0.1);
  Eigen::VectorXd p0(9);
  const double rot = std::numbers::pi / 6.0;
  p0 << Eigen::Vector3d::Constant(rot * rot), Eigen::Vector3d::Constant(100.0), Eigen::Vector3d::Constant(100.0);
  cfg.N = Eigen::MatrixXd::Identity(3, 3);
  // Placeholder length profile: 10 m, ramp down to 5 m, hold.
  cfg.cable.knots = {{0.0, 10.0}, {0.5, 10.0}, {1.5, 5.0}, {2.5, 5.0}};
  cfg.initial.theta = std::numbers::pi / 4.0;
  cfg.initial.phi_dot = id == 1 ? 1.0 : 0.0;

  if (id >= 2) {
    // planar motion in y = 0: no gyro noise about x and z, no accel noise along y,
    // and no prior uncertainty on those directions
    q(0) = q(2) = q(4) = 0.0;
    for (int i : {0, 2, 4, 7}) p0(i) = 0.0;
  }
  if (id == 3) {
    cfg.N = Eigen::MatrixXd::Zero(3, 3);
    cfg.gain_mode = GainMode::regularized(1e-5);
  }
  cfg.Q = q.asDiagonal();
  cfg.P0 = p0.asDiagonal();
  return cfg;
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, int n, const char* name) {
  Eigen::MatrixXd m;
  if (j.is_object()) {
    if (!j.contains("diag") || j.size() != 1) throw ConfigError(std::string(name) + ": expected {\"diag\": [...]}");
    const auto d = j.at("diag").get<std::vector<double>>();
    if (static_cast<int>(d.size()) != n) throw ConfigError(std::string(name) + ": diag must have " + std::to_string(n) + " entries");
    m = Eigen::Map<const Eigen::VectorXd>(d.data(), n).asDiagonal();
    return m;
  }
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (static_cast<int>(rows.size()) != n) throw ConfigError(std::string(name) + ": wrong number of rows");
  m.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw ConfigError(std::string(name) + ": wrong number of columns");
    for (int k = 0; k < n; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

GainMode gain_from_json(const json& j) {
  static const std::set<std::string> keys{"mode", "delta"};
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw ConfigError("gain: unknown key '" + k + "'");
  }
  const std::string mode = j.value("mode", std::string("standard"));
  if (mode == "standard") return GainMode::standard();
  if (mode == "noise_free") return GainMode::noise_free();
  if (mode == "regularized") return GainMode::regularized(j.value("delta", 1e-5));
  throw ConfigError("gain: unknown mode '" + mode + "'");
}

const char* gain_name(GainMode::Kind k) {
  switch (k) {
    case GainMode::Kind::Standard:
      return "standard";
    case GainMode::Kind::NoiseFree:
      return "noise_free";
    case GainMode::Kind::Regularized:
      return "regularized";
  }
  return "standard";
}

void apply_overrides(ScenarioConfig& cfg, const json& j) {
  static const std::set<std::string> keys{"scenario_id", "duration", "rate", "n_sims", "seed", "tol", "n_max",
                                          "gain", "Q", "N", "P0", "cable_profile", "initial", "gravity",
                                          "substeps"};
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  if (j.contains("duration")) cfg.duration = j.at("duration").get<double>();
  if (j.contains("rate")) cfg.rate = j.at("rate").get<double>();
  if (j.contains("n_sims")) cfg.n_sims = j.at("n_sims").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  if (j.contains("n_max")) cfg.n_max = j.at("n_max").get<int>();
  if (j.contains("substeps")) cfg.substeps = j.at("substeps").get<int>();
  if (j.contains("gain")) cfg.gain_mode = gain_from_json(j.at("gain"));
  if (j.contains("Q")) cfg.Q = matrix_from_json(j.at("Q"), 6, "Q");
  if (j.contains("N")) cfg.N = matrix_from_json(j.at("N"), 3, "N");
  if (j.contains("P0")) cfg.P0 = matrix_from_json(j.at("P0"), 9, "P0");
  if (j.contains("cable_profile")) {
    cfg.cable.knots.clear();
    for (const auto& knot : j.at("cable_profile")) {
      const auto pair = knot.get<std::vector<double>>();
      if (pair.size() != 2) throw ConfigError("cable_profile entries must be [time, length]");
      cfg.cable.knots.emplace_back(pair[0], pair[1]);
    }
  }
  if (j.contains("initial")) {
    static const std::set<std::string> ikeys{"phi", "theta", "phi_dot", "theta_dot", "hang_point"};
    const json& ini = j.at("initial");
    for (const auto& [k, v] : ini.items()) {
      if (!ikeys.count(k)) throw ConfigError("initial: unknown key '" + k + "'");
    }
    cfg.initial.phi = ini.value("phi", cfg.initial.phi);
    cfg.initial.theta = ini.value("theta", cfg.initial.theta);
    cfg.initial.phi_dot = ini.value("phi_dot", cfg.initial.phi_dot);
    cfg.initial.theta_dot = ini.value("theta_dot", cfg.initial.theta_dot);
    if (ini.contains("hang_point")) {
      const auto h = ini.at("hang_point").get<std::vector<double>>();
      if (h.size() != 3) throw ConfigError("initial.hang_point must have 3 entries");
      cfg.initial.hang_point = Eigen::Vector3d(h[0], h[1], h[2]);
    }
  }
  if (j.contains("gravity")) {
    const auto g = j.at("gravity").get<std::vector<double>>();
    if (g.size() != 3) throw ConfigError("gravity must have 3 entries");
    cfg.gravity = Eigen::Vector3d(g[0], g[1], g[2]);
  }
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& json_text, int id) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    int chosen = id;
    if (j.contains("scenario_id")) {
      const int file_id = j.at("scenario_id").get<int>();
      if (id != 0 && file_id != id) {
        throw ConfigError("config is for scenario " + std::to_string(file_id) + ", requested " + std::to_string(id));
      }
      chosen = file_id;
    }
    if (chosen == 0) throw ConfigError("no scenario id given");
    ScenarioConfig cfg = default_scenario(chosen);
    apply_overrides(cfg, j);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a wrong value type: ") + e.what());
  }
}

ScenarioConfig load_scenario_config(const std::string& path, int id) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str(), id);
}

std::string scenario_config_json(const ScenarioConfig& cfg) {
  json j;
  j["scenario_id"] = cfg.scenario_id;
  j["duration"] = cfg.duration;
  j["rate"] = cfg.rate;
  j["n_sims"] = cfg.n_sims;
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  j["n_max"] = cfg.n_max;
  j["substeps"] = cfg.substeps;
  j["gain"] = {{"mode", gain_name(cfg.gain_mode.kind)}, {"delta", cfg.gain_mode.delta}};
  j["Q"] = matrix_to_json(cfg.Q);
  j["N"] = matrix_to_json(cfg.N);
  j["P0"] = matrix_to_json(cfg.P0);
  json knots = json::array();
  for (const auto& [t, l] : cfg.cable.knots) knots.push_back({t, l});
  j["cable_profile"] = knots;
  j["initial"] = {{"phi", cfg.initial.phi},
                  {"theta", cfg.initial.theta},
                  {"phi_dot", cfg.initial.phi_dot},
                  {"theta_dot", cfg.initial.theta_dot},
                  {"hang_point", {cfg.initial.hang_point.x(), cfg.initial.hang_point.y(), cfg.initial.hang_point.z()}}};
  j["gravity"] = {cfg.gravity.x(), cfg.gravity.y(), cfg.gravity.z()};
  return j.dump(2);
}

}  // namespace iiekf::crane
