#include "iiekf/monte_carlo.hpp"

#include <cmath>
#include <exception>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "iiekf/errors.hpp"
#include "iiekf/filters.hpp"

namespace iiekf::crane {

const char* filter_name(FilterId id) {
  switch (id) {
    case FilterId::EKF:
      return "ekf";
    case FilterId::IterEKF:
      return "iterekf";
    case FilterId::IEKF:
      return "iekf";
    case FilterId::IIEKF:
      return "iiekf";
  }
  return "unknown";
}

SimulationInputs draw_inputs(const ScenarioConfig& cfg, const TruthTrajectory& truth, int sim) {
  std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(sim));
  const auto g = MatrixGroup::se23();
  SimulationInputs in;
  const Eigen::VectorXd xi0 = sample_gaussian(cfg.P0, rng);
  // chi_0 = chi_hat_0 exp(xi_0)
  in.initial_estimate = ExtendedPose::from_group(truth.poses.front().to_group() * g.exp(-xi0));
  in.imu = synthesize_imu(truth.poses, cfg.dt(), cfg.Q, rng, cfg.gravity);
  in.measurements.reserve(truth.poses.size());
  for (std::size_t k = 0; k < truth.poses.size(); ++k) {
    in.measurements.push_back(measure(truth.poses[k], truth.lengths[k], cfg.N, rng));
  }
  return in;
}

namespace {

template <class Update, class Predict, class Record>
FilterRun run_loop(int K, Update update, Predict predict, Record record) {
  FilterRun run;
  run.steps.resize(K);
  for (int k = 0; k < K; ++k) {
    try {
      const UpdateReport rep = update(k);
      StepRecord& s = run.steps[k];
      record(k, s);
      s.iterations = rep.iterations;
      s.converged = rep.converged;
      s.valid = std::isfinite(s.err_norm) && std::isfinite(s.nees);
      if (!s.valid) throw NonFinite("non-finite error or covariance");
      if (k + 1 < K) predict(k);
    } catch (const Error& e) {
      // only numerical breakdowns count as divergence
      if (!dynamic_cast<const NonFinite*>(&e) && !dynamic_cast<const SingularInnovation*>(&e) &&
          !dynamic_cast<const AngleNearPi*>(&e) && !dynamic_cast<const NotPSD*>(&e)) {
        throw;
      }
      run.steps[k].valid = false;
      run.diverged = true;
      run.diverged_at = k;
      run.reason = e.what();
      break;
    }
  }
  return run;
}

}  // namespace

FilterRun run_filter(FilterId id, const ScenarioConfig& cfg, const TruthTrajectory& truth,
                     const SimulationInputs& in) {
  const int K = static_cast<int>(truth.poses.size());
  const GNConfig gn = cfg.gn();

  if (id == FilterId::EKF || id == FilterId::IterEKF) {
    Belief<ExtendedPose> b{in.initial_estimate, cfg.P0};
    auto update = [&](int k) {
      const auto model = ekf_model(cfg, truth.lengths[k]);
      auto out = id == FilterId::EKF ? ekf_update(b, model, in.measurements[k], cfg.gain_mode)
                                     : iterekf_update(b, model, in.measurements[k], gn);
      b = std::move(out.belief);
      return out.report;
    };
    auto predict = [&](int k) { b = ekf_predict(b, ekf_model(cfg, truth.lengths[k]), in.imu[k].input()); };
    auto record = [&](int k, StepRecord& s) {
      s.err_norm = invariant_error(b.mean.to_group(), truth.poses[k].to_group()).norm();
      const Nees n = nees(ekf_error(b.mean, truth.poses[k]), b.cov);
      s.nees = n.value;
      s.nees_dof = n.n_dof;
    };
    return run_loop(K, update, predict, record);
  }

  const InvariantModel model = iekf_model(cfg);
  GroupBelief b{in.initial_estimate.to_group(), cfg.P0};
  auto update = [&](int k) {
    const InvariantMeasurement meas{measurement_direction(truth.lengths[k]), measure5(in.measurements[k]), cfg.N};
    auto out = id == FilterId::IEKF ? iekf_update(b, meas, cfg.gain_mode) : iiekf_update(b, meas, gn);
    b = std::move(out.belief);
    return out.report;
  };
  auto predict = [&](int k) {
    b = iekf_predict(b, model, in.imu[k].input());
    if (!b.mean.matrix().allFinite()) throw NonFinite("non-finite invariant estimate");
  };
  auto record = [&](int k, StepRecord& s) {
    const Eigen::VectorXd xi = invariant_error(b.mean, truth.poses[k].to_group());
    s.err_norm = xi.norm();
    const Nees n = nees(xi, b.cov);
    s.nees = n.value;
    s.nees_dof = n.n_dof;
  };
  return run_loop(K, update, predict, record);
}

SimulationResult run_simulation(const ScenarioConfig& cfg, const TruthTrajectory& truth, int sim) {
  const SimulationInputs in = draw_inputs(cfg, truth, sim);
  SimulationResult r;
  r.sim = sim;
  for (FilterId id : kAllFilters) r.filters[static_cast<std::size_t>(id)] = run_filter(id, cfg, truth, in);
  return r;
}

std::vector<SimulationResult> run_monte_carlo(const ScenarioConfig& cfg, Execution mode, int threads) {
  cfg.validate();
  const TruthTrajectory truth = simulate_truth(cfg);
  const int n = cfg.n_sims;
  std::vector<SimulationResult> results(n);

  if (mode == Execution::Serial) {
    for (int i = 0; i < n; ++i) results[i] = run_simulation(cfg, truth, i);
    return results;
  }

  std::exception_ptr failure;
#ifdef _OPENMP
  const int workers = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#else
  (void)threads;
#endif
  for (int i = 0; i < n; ++i) {
    try {
      results[i] = run_simulation(cfg, truth, i);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(iiekf_mc_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

MonteCarloSummary summarize(const ScenarioConfig& cfg, const std::vector<SimulationResult>& runs) {
  MonteCarloSummary out;
  out.scenario_id = cfg.scenario_id;
  out.n_sims = static_cast<int>(runs.size());
  const int K = cfg.steps();
  const int burn_in = K / 10;
  std::map<std::pair<int, int>, AneesInterval> intervals;

  for (FilterId id : kAllFilters) {
    const std::size_t f = static_cast<std::size_t>(id);
    FilterSummary& fs = out.filters[f];
    fs.id = id;
    fs.steps.resize(K);
    double iter_sum = 0.0;
    long iter_count = 0;
    int in_interval = 0, above = 0, scored = 0;
    for (const auto& r : runs) fs.n_diverged += r.filters[f].diverged ? 1 : 0;

    for (int k = 0; k < K; ++k) {
      StepSummary& s = fs.steps[k];
      s.k = k;
      double sum = 0.0, sum2 = 0.0, nees_sum = 0.0, its = 0.0;
      std::map<int, int> dofs;
      for (const auto& r : runs) {
        const auto& steps = r.filters[f].steps;
        if (k >= static_cast<int>(steps.size()) || !steps[k].valid) continue;
        const StepRecord& rec = steps[k];
        ++s.n_valid;
        sum += rec.err_norm;
        sum2 += rec.err_norm * rec.err_norm;
        nees_sum += rec.nees;
        its += rec.iterations;
        ++dofs[rec.nees_dof];
      }
      if (s.n_valid == 0) {
        s.mean_err = s.std_err = s.anees = s.mean_iters = std::nan("");
        continue;
      }
      const double n = s.n_valid;
      s.mean_err = sum / n;
      s.std_err = s.n_valid > 1 ? std::sqrt(std::max(0.0, (sum2 - n * s.mean_err * s.mean_err) / (n - 1.0))) : 0.0;
      s.anees = nees_sum / n;
      s.mean_iters = its / n;
      iter_sum += its;
      iter_count += s.n_valid;
      int best = 0, count = -1;
      for (const auto& [d, c] : dofs) {
        if (c > count) best = d, count = c;
      }
      s.anees_dof = best;
      if (best > 0) {
        auto key = std::make_pair(s.n_valid, best);
        auto it = intervals.find(key);
        if (it == intervals.end()) it = intervals.emplace(key, chi2_interval(s.n_valid, best)).first;
        s.r1 = it->second.r1;
        s.r2 = it->second.r2;
      }
      if (k >= burn_in && best > 0) {
        ++scored;
        in_interval += (s.anees >= s.r1 && s.anees <= s.r2) ? 1 : 0;
        above += s.anees > s.r2 ? 1 : 0;
      }
    }
    fs.mean_iterations = iter_count > 0 ? iter_sum / static_cast<double>(iter_count) : std::nan("");
    fs.final_mean_err = fs.steps.back().mean_err;
    fs.anees_in_interval = scored > 0 ? static_cast<double>(in_interval) / scored : 0.0;
    fs.anees_above_r2 = scored > 0 ? static_cast<double>(above) / scored : 0.0;
  }
  return out;
}

}  // namespace iiekf::crane
