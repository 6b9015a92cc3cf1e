// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "iiekf/crane.hpp"
#include "iiekf/filters.hpp"
#include "iiekf/lie_solver.hpp"
#include "iiekf/metrics.hpp"
#include "iiekf/scenario_runner.hpp"
#include "test_util.hpp"

using namespace iiekf;
using namespace iiekf::crane;
using iiekf::testing::random_in_ball;
using iiekf::testing::random_matrix;
using iiekf::testing::random_spd;
using iiekf::testing::random_vector;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("CRITERION %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd position_direction(const Eigen::Vector3d& r) {
  Eigen::VectorXd d(5);
  d << r, 0, 1;
  return d;
}

// ------------------------------------------------------------------- 1
void lie_core() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst_round_trip = 0.0, worst_order = 1e9;
  for (const MatrixGroup& g : {MatrixGroup::so3(), MatrixGroup::se23()}) {
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd xi = random_in_ball(rng, g.dim(), 3.0);
      worst_round_trip = std::max(worst_round_trip, (g.log(g.exp(xi)) - xi).norm());
    }
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd xi = random_in_ball(rng, g.dim(), 2.0);
      const Eigen::VectorXd dir = random_vector(rng, g.dim()).normalized();
      const Eigen::MatrixXd Jr = g.right_jacobian(xi);
      auto err = [&](double h) {
        const Eigen::VectorXd delta = h * dir;
        return (g.exp(xi + delta).matrix() - (g.exp(xi) * g.exp(Jr * delta)).matrix()).norm();
      };
      for (double h = 1e-2; h > 2e-3; h /= 2) worst_order = std::min(worst_order, std::log2(err(h) / err(h / 2)));
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst_round_trip <= 1e-9 && worst_order >= 1.9 && secs < 5.0,
         fmt("max exp/log round trip %.2e, min Jacobian order %.3f, %.2f s", worst_round_trip, worst_order, secs));
}

// ------------------------------------------------------------------- 2
void noise_free_linear() {
  std::mt19937_64 rng(102);
  double first = 0.0, second = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 6;
    const Eigen::MatrixXd H = random_matrix(rng, 3, n);
    const Eigen::VectorXd y = random_vector(rng, 3);
    VectorBelief b{random_vector(rng, n), random_spd(rng, n)};
    b = kf_update(b, H, y, {}, GainMode::noise_free()).belief;
    first = std::max({first, (H * b.mean - y).norm(), (H * b.cov * H.transpose()).norm()});
    const GainMode mode = trial % 2 ? GainMode::noise_free() : GainMode::standard();
    b = kf_update(b, random_matrix(rng, 2, n), random_vector(rng, 2), random_spd(rng, 2), mode).belief;
    second = std::max({second, (H * b.mean - y).norm(), (H * b.cov * H.transpose()).norm()});
  }
  report(2, first <= 1e-10 && second <= 1e-9,
         fmt("after update %.2e, after second update %.2e (100 instances)", first, second));
}

// ------------------------------------------------------------------- 3
void linear_system() {
  Eigen::Matrix3d A;
  A << 3, 5, 1, 7, -2, 4, -6, 3, 2;
  const Eigen::Vector3d rhs(3, 4, 2);
  const Eigen::Vector3d dense = A.fullPivLu().solve(rhs);
  std::array<int, 3> order{0, 1, 2};
  double worst = 0.0;
  int orders = 0;
  do {
    std::vector<LinearEquation> sys;
    for (int j : order) sys.push_back({A.row(j), rhs.segment(j, 1)});
    worst = std::max(worst, (solve_linear(sys, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)) - dense).norm());
    ++orders;
  } while (std::next_permutation(order.begin(), order.end()));
  report(3, worst <= 1e-9 && orders == 6, fmt("max deviation from dense solve %.2e over %g orders", worst, orders));
}

// ------------------------------------------------------------------- 4
void landing() {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  int rank_ok = 0;
  for (const MatrixGroup& g : {MatrixGroup::so3(), MatrixGroup::se23()}) {
    const bool se23 = g.kind() == GroupKind::SE23;
    for (int trial = 0; trial < 100; ++trial) {
      const GroupBelief b{g.exp(random_in_ball(rng, g.dim(), 1.0)), random_spd(rng, g.dim())};
      const GroupElement truth = b.mean * g.exp(random_in_ball(rng, g.dim(), 0.5));
      const Eigen::VectorXd d = se23 ? position_direction(random_vector(rng, 3, 3.0))
                                     : Eigen::VectorXd(random_vector(rng, 3).normalized());
      const Eigen::VectorXd y = truth.act(d);
      const GroupBelief out = iiekf_update_noise_free(b, d, y, GNConfig{}).belief;
      worst = std::max(worst, (out.mean.act(d) - y).norm());
      rank_ok += covariance_rank(out.cov) == covariance_rank(b.cov) - (se23 ? 3 : 2) ? 1 : 0;
    }
  }
  report(4, worst <= 1e-8 && rank_ok == 200, fmt("max residual %.2e, rank drop correct in %g/200", worst, rank_ok));
}

// ------------------------------------------------------------------- 5
void theorems() {
  const auto g = MatrixGroup::se23();
  std::mt19937_64 rng(105);
  double hph1 = 0.0, res2 = 0.0, hph2 = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const GroupBelief b0{g.exp(random_in_ball(rng, 9, 1.0)), random_spd(rng, 9)};
    const GroupElement truth = b0.mean * g.exp(random_in_ball(rng, 9, 0.5));
    const Eigen::VectorXd d1 = position_direction(random_vector(rng, 3, 3.0));
    const Eigen::VectorXd y1 = truth.act(d1);
    const Eigen::MatrixXd H1 = invariant_output_jacobian(g, d1).topRows(3);
    const GroupBelief b1 = iiekf_update_noise_free(b0, d1, y1, GNConfig{}).belief;
    hph1 = std::max(hph1, (H1 * b1.cov * H1.transpose()).norm());

    Eigen::VectorXd d2(5);
    d2 << random_vector(rng, 3), trial % 2, 1 - trial % 2;
    const Eigen::VectorXd y2 = (truth * g.exp(random_in_ball(rng, 9, 0.1))).act(d2);
    const GroupBelief b2 = trial % 3 == 0 ? iiekf_update_noise_free(b1, d2, y2, GNConfig{}).belief
                                          : iiekf_update(b1, {d2, y2, random_spd(rng, 3)}, GNConfig{}).belief;
    res2 = std::max(res2, (b2.mean.act(d1) - y1).norm());
    hph2 = std::max(hph2, (H1 * b2.cov * H1.transpose()).norm());
  }
  report(5, hph1 <= 1e-9 && res2 <= 1e-8 && hph2 <= 1e-9,
         fmt("|HP+H'| %.2e; after second update residual %.2e, |HP++H'| %.2e", hph1, res2, hph2));
}

// ------------------------------------------------------------------- 6
void so3_solver() {
  const auto g = MatrixGroup::so3();
  const Eigen::Matrix3d R_star = so3::exp(Eigen::Vector3d(0.2, -0.1, 0.3));
  const Eigen::Vector3d d1 = Eigen::Vector3d::UnitX(), d2 = Eigen::Vector3d::UnitY();
  const GroupElement initial = g.exp(Eigen::Vector3d(0.05, 0, 0)) * GroupElement(g, R_star);
  const Eigen::MatrixXd P0 = Eigen::MatrixXd::Identity(3, 3);
  GNConfig cfg;
  cfg.record_iterates = true;
  const SolveResult r = solve({g, {{d1, R_star * d1}, {d2, R_star * d2}}}, initial, P0, cfg);
  const GroupBelief after1 = iiekf_update_noise_free({initial, P0}, d1, R_star * d1, cfg).belief;
  double eq1 = 0.0, cross = 0.0;
  for (const auto& xi : r.reports.at(1).iterates) {
    eq1 = std::max(eq1, ((after1.mean * g.exp(xi)).act(d1) - R_star * d1).norm());
    cross = std::max(cross, Eigen::Vector3d(xi).cross(d1).norm());
  }
  const double res = std::max(r.residuals[0], r.residuals[1]);
  report(6, res <= 1e-8 && eq1 <= 1e-8 && cross <= 1e-10 && !r.reports[1].iterates.empty(),
         fmt("residuals %.2e, eq.1 along iterates %.2e, |xi x d1| %.2e over %g iterates", res, eq1, cross,
             static_cast<double>(r.reports[1].iterates.size())));
}

// ------------------------------------------------------------------- 7
void equivalences() {
  std::mt19937_64 rng(107);
  const auto g = MatrixGroup::se23();
  double inv = 0.0, ekf = 0.0;
  GNConfig one;
  one.n_max = 1;
  for (int trial = 0; trial < 50; ++trial) {
    const GroupBelief b{g.exp(random_in_ball(rng, 9, 1.0)), random_spd(rng, 9)};
    const Eigen::VectorXd d = position_direction(random_vector(rng, 3, 3.0));
    const InvariantMeasurement m{d, (b.mean * g.exp(random_in_ball(rng, 9, 0.5))).act(d), random_spd(rng, 3)};
    const auto a = iiekf_update(b, m, one).belief;
    const auto c = iekf_update(b, m).belief;
    inv = std::max({inv, (a.mean.matrix() - c.mean.matrix()).norm(), (a.cov - c.cov).norm()});

    const ExtendedPose x{so3::exp(random_in_ball(rng, 3, 2.0)), random_vector(rng, 3), random_vector(rng, 3, 5.0)};
    const Belief<ExtendedPose> eb{x, random_spd(rng, 9)};
    const auto model = ekf_model(default_scenario(1), 4.0);
    const Eigen::Vector3d y = measure(ekf_retract(x, random_in_ball(rng, 9, 0.5)), 4.0);
    const auto p = iterekf_update(eb, model, y, one).belief;
    const auto q = ekf_update(eb, model, y).belief;
    ekf = std::max({ekf, (p.mean.R - q.mean.R).norm(), (p.mean.v - q.mean.v).norm(), (p.mean.p - q.mean.p).norm(),
                    (p.cov - q.cov).norm()});
  }
  report(7, inv <= 1e-14 && ekf <= 1e-14, fmt("IIEKF(1) vs IEKF %.2e, IterEKF(1) vs EKF %.2e", inv, ekf));
}

// ------------------------------------------------------------------- 8
std::array<MonteCarloSummary, 3> crane_runs;

void crane_benchmark(const fs::path& scratch) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int id = 1; id <= 3; ++id) {
    ScenarioConfig cfg = default_scenario(id);
    cfg.n_sims = 50;
    cfg.seed = 0;  // the CLI default
    crane_runs[id - 1] = run_scenario(cfg, scratch / ("scenario" + std::to_string(id))).summary;
  }
  const double secs = seconds_since(t0);

  bool a = true, b = true;
  std::string detail;
  for (int id = 1; id <= 3; ++id) {
    const auto& s = crane_runs[id - 1];
    const double it = s.at(FilterId::IIEKF).mean_iterations, it_ref = s.at(FilterId::IterEKF).mean_iterations;
    a = a && it < it_ref;
    detail += fmt("S%g iters %.2f/%.2f", id, it, it_ref);
    if (id == 3) {
      a = a && it / it_ref <= 0.7;
      detail += fmt(" (ratio %.2f)", it / it_ref);
    }
    if (id >= 2) {
      const double mine = s.at(FilterId::IIEKF).final_mean_err;
      for (FilterId f : kAllFilters) {
        const double other = s.at(f).final_mean_err;
        b = b && (!std::isfinite(other) || mine <= other);
      }
      detail += fmt(", final err %.3g", mine);
    }
    detail += "; ";
  }
  const auto& s1 = crane_runs[0];
  const double in = s1.at(FilterId::IIEKF).anees_in_interval, above = s1.at(FilterId::EKF).anees_above_r2;
  const bool c = in >= 0.7 && above >= 0.5;
  detail += fmt("S1 IIEKF ANEES in interval %.0f%%, EKF above r2 %.0f%%; %.1f s", 100 * in, 100 * above, secs);
  report(8, a && b && c && secs < 120.0, detail);
}

// ------------------------------------------------------------------- 9
void observability() {
  const ScenarioConfig cfg = default_scenario(1);
  const TruthTrajectory tr = simulate_truth(cfg);
  std::mt19937_64 rng(109);
  const auto imu = synthesize_imu(tr.poses, cfg.dt(), cfg.Q, rng);
  int eights = 0, tested = 0;
  for (int k = 2; tested < 10; k += 24, ++tested) {
    const auto rep = observability_matrix({imu[k - 2], imu[k - 1]},
                                          {lever_arm(tr.lengths[k - 2]), lever_arm(tr.lengths[k - 1]),
                                           lever_arm(tr.lengths[k])});
    eights += rep.rank == 8 ? 1 : 0;
  }
  report(9, eights == 10, fmt("rank 8 at %g/10 sampled epochs", eights));
}

// ------------------------------------------------------------------ 10
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const fs::path& scratch) {
  bool same = true;
  int compared = 0;
  for (int id = 1; id <= 3; ++id) {
    ScenarioConfig cfg = default_scenario(id);
    cfg.n_sims = 10;
    cfg.seed = 7;
    const fs::path a = scratch / ("rerun_a" + std::to_string(id)), b = scratch / ("rerun_b" + std::to_string(id));
    run_scenario(cfg, a, Execution::Parallel);
    run_scenario(cfg, b, Execution::Parallel, 2);
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      same = same && slurp(entry.path()) == slurp(b / entry.path().filename());
      ++compared;
    }
  }
  report(10, same && compared == 15, fmt("%g CSV files compared across reruns", compared));
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "iiekf_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<int, std::function<void()>>> criteria{
      {1, lie_core},
      {2, noise_free_linear},
      {3, linear_system},
      {4, landing},
      {5, theorems},
      {6, so3_solver},
      {7, equivalences},
      {8, [&] { crane_benchmark(scratch); }},
      {9, observability},
      {10, [&] { determinism(scratch); }},
  };
  for (const auto& [id, check] : criteria) {
    try {
      check();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  }
  fs::remove_all(scratch);
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
