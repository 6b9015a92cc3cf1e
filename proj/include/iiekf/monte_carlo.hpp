#pragma once

// Monte Carlo comparison of EKF, iterated EKF, IEKF and IIEKF on the crane.
// Every simulation owns its RNG stream (seed + index) so results do not
// depend on how simulations are scheduled.

#include <array>
#include <string>
#include <vector>

#include "iiekf/crane.hpp"
#include "iiekf/metrics.hpp"
#include "iiekf/scenario_config.hpp"

namespace iiekf::crane {

enum class FilterId { EKF = 0, IterEKF = 1, IEKF = 2, IIEKF = 3 };
inline constexpr std::array<FilterId, 4> kAllFilters{FilterId::EKF, FilterId::IterEKF, FilterId::IEKF,
                                                     FilterId::IIEKF};
inline constexpr std::size_t kFilterCount = kAllFilters.size();

const char* filter_name(FilterId id);

struct StepRecord {
  bool valid = false;       // false once the filter has diverged
  double err_norm = 0.0;    // |log(chi_hat^-1 chi)|
  double nees = 0.0;        // in the filter's own error coordinates
  int nees_dof = 0;
  int iterations = 0;       // Gauss-Newton iterations of the update
  bool converged = true;
};

struct FilterRun {
  std::vector<StepRecord> steps;
  bool diverged = false;
  int diverged_at = -1;
  std::string reason;
};

struct SimulationResult {
  int sim = 0;
  std::array<FilterRun, kFilterCount> filters;
};

/// Noise-dependent inputs of one simulation, drawn from the simulation's
/// own stream: initial error, IMU samples and measurements in that order.
struct SimulationInputs {
  ExtendedPose initial_estimate;
  std::vector<ImuSample> imu;
  std::vector<Eigen::Vector3d> measurements;
};

SimulationInputs draw_inputs(const ScenarioConfig& cfg, const TruthTrajectory& truth, int sim);

/// Runs one filter over the horizon. Divergence (non-finite iterate,
/// singular innovation, rotation error at pi) ends the run and is recorded.
FilterRun run_filter(FilterId id, const ScenarioConfig& cfg, const TruthTrajectory& truth,
                     const SimulationInputs& in);

SimulationResult run_simulation(const ScenarioConfig& cfg, const TruthTrajectory& truth, int sim);

enum class Execution { Serial, Parallel };

/// All cfg.n_sims simulations. Parallel fans out over simulations with
/// OpenMP; threads <= 0 keeps the OpenMP default.
std::vector<SimulationResult> run_monte_carlo(const ScenarioConfig& cfg, Execution mode = Execution::Parallel,
                                              int threads = 0);

struct StepSummary {
  int k = 0;
  int n_valid = 0;
  double mean_err = 0.0;
  double std_err = 0.0;
  double anees = 0.0;
  int anees_dof = 0;
  double r1 = 0.0, r2 = 0.0;
  double mean_iters = 0.0;
};

struct FilterSummary {
  FilterId id = FilterId::EKF;
  std::vector<StepSummary> steps;
  double mean_iterations = 0.0;   // over every valid update of every run
  double final_mean_err = 0.0;
  int n_diverged = 0;
  /// Fractions of epochs from 10% of the horizon on.
  double anees_in_interval = 0.0;
  double anees_above_r2 = 0.0;
};

struct MonteCarloSummary {
  int scenario_id = 0;
  int n_sims = 0;
  std::array<FilterSummary, kFilterCount> filters;

  const FilterSummary& at(FilterId id) const { return filters[static_cast<std::size_t>(id)]; }
};

MonteCarloSummary summarize(const ScenarioConfig& cfg, const std::vector<SimulationResult>& runs);

}  // namespace iiekf::crane
