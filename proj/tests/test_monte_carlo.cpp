#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "iiekf/errors.hpp"
#include "iiekf/monte_carlo.hpp"
#include "iiekf/scenario_runner.hpp"

using namespace iiekf;
using namespace iiekf::crane;

namespace {

ScenarioConfig small(int id, int sims = 6) {
  ScenarioConfig cfg = default_scenario(id);
  cfg.n_sims = sims;
  cfg.seed = 17;
  return cfg;
}

std::string runs_csv(const ScenarioConfig& cfg, const std::vector<SimulationResult>& runs) {
  std::ostringstream out;
  write_runs_csv(out, cfg.scenario_id, runs);
  return out.str();
}

}  // namespace

TEST(DrawInputs, InitialErrorStaysInPriorSupport) {
  const ScenarioConfig cfg = small(2);
  const TruthTrajectory truth = simulate_truth(cfg);
  for (int sim = 0; sim < 5; ++sim) {
    const SimulationInputs in = draw_inputs(cfg, truth, sim);
    const Eigen::VectorXd xi0 = invariant_error(in.initial_estimate.to_group(), truth.poses[0].to_group());
    for (int i : {0, 2, 4, 7}) EXPECT_LE(std::abs(xi0(i)), 1e-9) << "index " << i;
    EXPECT_GT(xi0.norm(), 0.0);
    EXPECT_EQ(in.imu.size(), truth.poses.size() - 1);
    EXPECT_EQ(in.measurements.size(), truth.poses.size());
  }
}

TEST(DrawInputs, StreamsDependOnSeedPlusIndex) {
  ScenarioConfig a = small(1), b = small(1);
  b.seed = a.seed + 1;
  const TruthTrajectory truth = simulate_truth(a);
  EXPECT_EQ(draw_inputs(a, truth, 1).measurements[5], draw_inputs(b, truth, 0).measurements[5]);
  EXPECT_NE(draw_inputs(a, truth, 0).measurements[5], draw_inputs(a, truth, 1).measurements[5]);
}

TEST(MonteCarlo, ParallelMatchesSerialReference) {
  for (int id : {1, 3}) {
    const ScenarioConfig cfg = small(id);
    const auto serial = run_monte_carlo(cfg, Execution::Serial);
    const auto parallel = run_monte_carlo(cfg, Execution::Parallel, 3);
    EXPECT_EQ(runs_csv(cfg, serial), runs_csv(cfg, parallel));
  }
}

TEST(MonteCarlo, RerunIsByteIdentical) {
  const ScenarioConfig cfg = small(2);
  const auto a = summarize(cfg, run_monte_carlo(cfg));
  const auto b = summarize(cfg, run_monte_carlo(cfg));
  for (FilterId id : kAllFilters) {
    std::ostringstream sa, sb;
    write_step_csv(sa, a.at(id), cfg.dt());
    write_step_csv(sb, b.at(id), cfg.dt());
    EXPECT_EQ(sa.str(), sb.str());
  }
}

TEST(MonteCarlo, SingleIterationFiltersReportOneIteration) {
  const ScenarioConfig cfg = small(1, 2);
  const auto runs = run_monte_carlo(cfg, Execution::Serial);
  for (const auto& r : runs) {
    for (FilterId id : {FilterId::EKF, FilterId::IEKF}) {
      for (const auto& s : r.filters[static_cast<std::size_t>(id)].steps) {
        if (s.valid) EXPECT_EQ(s.iterations, 1);
      }
    }
  }
}

TEST(MonteCarlo, ZeroInitialErrorAndNoiseStaysOnTruth) {
  ScenarioConfig cfg = small(1, 1);
  cfg.P0 = 1e-30 * Eigen::MatrixXd::Identity(9, 9);
  cfg.Q = Eigen::MatrixXd::Zero(6, 6);
  cfg.N = 1e-6 * Eigen::MatrixXd::Identity(3, 3);
  const auto runs = run_monte_carlo(cfg, Execution::Serial);
  for (const auto& run : runs[0].filters) {
    ASSERT_FALSE(run.diverged) << run.reason;
    for (const auto& s : run.steps) EXPECT_LE(s.err_norm, 1e-5);
  }
}

TEST(MonteCarlo, DivergenceIsRecordedNotFatal) {
  const ScenarioConfig cfg = small(1, 2);
  const TruthTrajectory truth = simulate_truth(cfg);
  SimulationInputs in = draw_inputs(cfg, truth, 0);
  in.measurements[100] = Eigen::Vector3d::Constant(std::nan(""));
  SimulationResult r;
  for (FilterId id : kAllFilters) {
    const FilterRun f = run_filter(id, cfg, truth, in);
    EXPECT_TRUE(f.diverged) << filter_name(id);
    EXPECT_EQ(f.diverged_at, 100);
    EXPECT_FALSE(f.reason.empty());
    EXPECT_TRUE(f.steps[99].valid);
    for (std::size_t k = 100; k < f.steps.size(); ++k) EXPECT_FALSE(f.steps[k].valid);
    r.filters[static_cast<std::size_t>(id)] = f;
  }
  // the healthy simulation is unaffected in the aggregate
  std::vector<SimulationResult> runs{r, run_simulation(cfg, truth, 1)};
  runs[1].sim = 1;
  const MonteCarloSummary s = summarize(cfg, runs);
  EXPECT_EQ(s.at(FilterId::IIEKF).n_diverged, 1);
  EXPECT_EQ(s.at(FilterId::IIEKF).steps[99].n_valid, 2);
  EXPECT_EQ(s.at(FilterId::IIEKF).steps[100].n_valid, 1);
  EXPECT_EQ(s.at(FilterId::IIEKF).steps[200].mean_err, runs[1].filters[3].steps[200].err_norm);
  std::ostringstream csv;
  write_runs_csv(csv, cfg.scenario_id, runs);
  EXPECT_NE(csv.str().find("1,0,100,iiekf,0,,,,,\n"), std::string::npos);
}

TEST(Summary, AggregatesMatchRecords) {
  const ScenarioConfig cfg = small(2, 4);
  const auto runs = run_monte_carlo(cfg, Execution::Serial);
  const MonteCarloSummary s = summarize(cfg, runs);
  const int k = 100;
  for (FilterId id : kAllFilters) {
    const auto f = static_cast<std::size_t>(id);
    double sum = 0.0, nees = 0.0;
    int n = 0;
    for (const auto& r : runs) {
      if (!r.filters[f].steps[k].valid) continue;
      sum += r.filters[f].steps[k].err_norm;
      nees += r.filters[f].steps[k].nees;
      ++n;
    }
    const StepSummary& st = s.at(id).steps[k];
    EXPECT_EQ(st.n_valid, n);
    EXPECT_NEAR(st.mean_err, sum / n, 1e-12);
    EXPECT_NEAR(st.anees, nees / n, 1e-9);
    const AneesInterval iv = chi2_interval(n, st.anees_dof);
    EXPECT_EQ(st.r1, iv.r1);
    EXPECT_EQ(st.r2, iv.r2);
  }
  // the planar scenario keeps five directions of uncertainty
  EXPECT_EQ(s.at(FilterId::IIEKF).steps[k].anees_dof, 5);
}
