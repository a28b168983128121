#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mwsla/config.hpp"
#include "mwsla/core.hpp"
#include "mwsla/metrics.hpp"

namespace mwsla {

struct PolicyResult {
  std::string label;
  std::string type;
  double total_work = 0.0;
  double final_queue_l1 = 0.0;
  double final_queue_l2 = 0.0;
  std::optional<std::size_t> monitor_checks;  // MW policies with monitors on
  std::optional<std::size_t> monitor_violations;
};

struct AdversaryReport {
  std::size_t phases = 0;
  double backlog = 0.0;
  double bound = 0.0;  // sqrt(T / 40)
};

struct RunSummary {
  std::string workload;
  std::size_t steps = 0;
  std::size_t users = 0;
  std::vector<double> sla;
  double epsilon = 0.0;
  double offline_optimal_eps0 = 0.0;
  double offline_optimal_eps = 0.0;
  std::vector<PolicyResult> policies;
  std::optional<AdversaryReport> adversary;
  double wall_clock_seconds = 0.0;

  const PolicyResult* find(const std::string& label) const;
  // key=value lines; every number is printed in shortest round-trip form.
  std::string to_text() const;
};

struct LabelledTrace {
  std::string label;
  SimulationTrace trace;
};

struct ExperimentResult {
  RunSummary summary;
  LoadMatrix loads;
  std::vector<LabelledTrace> traces;  // in config order
  std::vector<SeriesReport> cumulative;
  std::vector<SeriesReport> differences;
  std::vector<SeriesReport> queue_norms;
  std::optional<SlaWindowStats> window;
  std::string window_policy;

  const SimulationTrace& trace(const std::string& label) const;
};

// Runs every policy on the configured workload and computes the requested
// metrics. Throws InvariantViolation when a runtime check fails (growth
// monitors, conservation, work above the offline optimum).
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes the CSVs, loads.csv and `summary` into `dir`. Throws IoError naming
// the path on failure.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

// Shortest representation that reads back to the same double.
std::string format_number(double v);

}  // namespace mwsla
