#include "iiekf/scenario_runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "iiekf/errors.hpp"

#ifndef IIEKF_VERSION
#define IIEKF_VERSION "dev"
#endif

namespace iiekf::crane {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fixed formatting so reruns produce identical bytes.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

std::string version_string() { return IIEKF_VERSION; }

void write_step_csv(std::ostream& out, const FilterSummary& f, double dt) {
  out << "k,t,mean_err,std_err,anees,anees_dof,r1,r2,mean_iters,n_valid\n";
  for (const auto& s : f.steps) {
    out << s.k << ',' << num(s.k * dt) << ',' << num(s.mean_err) << ',' << num(s.std_err) << ',' << num(s.anees)
        << ',' << s.anees_dof << ',' << num(s.r1) << ',' << num(s.r2) << ',' << num(s.mean_iters) << ','
        << s.n_valid << '\n';
  }
}

void write_runs_csv(std::ostream& out, int scenario_id, const std::vector<SimulationResult>& runs) {
  out << "scenario,sim,k,filter,valid,err_norm,nees,nees_dof,iterations,converged\n";
  for (const auto& r : runs) {
    for (FilterId id : kAllFilters) {
      const FilterRun& run = r.filters[static_cast<std::size_t>(id)];
      for (std::size_t k = 0; k < run.steps.size(); ++k) {
        const StepRecord& s = run.steps[k];
        out << scenario_id << ',' << r.sim << ',' << k << ',' << filter_name(id) << ',' << (s.valid ? 1 : 0) << ',';
        if (s.valid) {
          out << num(s.err_norm) << ',' << num(s.nees) << ',' << s.nees_dof << ',' << s.iterations << ','
              << (s.converged ? 1 : 0) << '\n';
        } else {
          out << ",,,,\n";
        }
      }
    }
  }
}

std::string summary_json(const ScenarioConfig& cfg, const MonteCarloSummary& summary,
                         const std::vector<SimulationResult>& runs) {
  json j;
  j["scenario_id"] = summary.scenario_id;
  j["n_sims"] = summary.n_sims;
  j["seed"] = cfg.seed;
  j["steps"] = cfg.steps();
  json filters = json::object();
  for (const auto& f : summary.filters) {
    json divergences = json::array();
    for (const auto& r : runs) {
      const FilterRun& run = r.filters[static_cast<std::size_t>(f.id)];
      if (run.diverged) divergences.push_back({{"sim", r.sim}, {"k", run.diverged_at}, {"reason", run.reason}});
    }
    filters[filter_name(f.id)] = {
        {"mean_gn_iterations", num_or_null(f.mean_iterations)},
        {"final_mean_err", num_or_null(f.final_mean_err)},
        {"n_diverged", f.n_diverged},
        {"anees_fraction_in_interval", f.anees_in_interval},
        {"anees_fraction_above_r2", f.anees_above_r2},
        {"divergences", divergences},
    };
  }
  j["filters"] = filters;
  return j.dump(2) + "\n";
}

RunManifest run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir, Execution mode, int threads) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  RunManifest m;
  m.config_json = scenario_config_json(cfg);
  m.seed = cfg.seed;
  m.version = version_string();

  auto t0 = clock::now();
  const auto runs = run_monte_carlo(cfg, mode, threads);
  auto t1 = clock::now();
  m.summary = summarize(cfg, runs);
  auto t2 = clock::now();

  fs::create_directories(out_dir);
  for (const auto& f : m.summary.filters) {
    const fs::path p = out_dir / (std::string(filter_name(f.id)) + ".csv");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    write_step_csv(out, f, cfg.dt());
    m.files.push_back(p);
  }
  {
    const fs::path p = out_dir / "runs.csv";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    write_runs_csv(out, cfg.scenario_id, runs);
    m.files.push_back(p);
  }
  write_file(out_dir / "summary.json", summary_json(cfg, m.summary, runs));
  m.files.push_back(out_dir / "summary.json");
  auto t3 = clock::now();

  m.seconds["simulate_and_filter"] = std::chrono::duration<double>(t1 - t0).count();
  m.seconds["aggregate"] = std::chrono::duration<double>(t2 - t1).count();
  m.seconds["write"] = std::chrono::duration<double>(t3 - t2).count();

  json man;
  man["version"] = m.version;
  man["seed"] = m.seed;
  man["scenario_id"] = cfg.scenario_id;
  man["execution"] = mode == Execution::Serial ? "serial" : "parallel";
  man["config"] = json::parse(m.config_json);
  json files = json::array();
  for (const auto& p : m.files) files.push_back(p.filename().string());
  man["files"] = files;
  man["seconds"] = m.seconds;
  write_file(out_dir / "manifest.json", man.dump(2) + "\n");
  m.files.push_back(out_dir / "manifest.json");
  return m;
}

}  // namespace iiekf::crane
