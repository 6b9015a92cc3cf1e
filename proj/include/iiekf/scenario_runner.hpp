#pragma once

// Runs a crane scenario and writes its results:
//   <filter>.csv    per-epoch statistics of one filter
//   runs.csv        one row per (simulation, epoch, filter)
//   summary.json    Table-I style aggregates
//   manifest.json   config snapshot, files and timings

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "iiekf/monte_carlo.hpp"

namespace iiekf::crane {

struct RunManifest {
  std::string config_json;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::filesystem::path> files;
  std::map<std::string, double> seconds;  // wall clock per phase
  MonteCarloSummary summary;
};

RunManifest run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                         Execution mode = Execution::Parallel, int threads = 0);

void write_step_csv(std::ostream& out, const FilterSummary& fs, double dt);
void write_runs_csv(std::ostream& out, int scenario_id, const std::vector<SimulationResult>& runs);
std::string summary_json(const ScenarioConfig& cfg, const MonteCarloSummary& summary,
                         const std::vector<SimulationResult>& runs);

std::string version_string();

}  // namespace iiekf::crane
