#pragma once

// Experiment configuration files.
//
//   # comment (also after values)
//   [experiment]
//   output_dir = out/example1
//   epsilon = 0.02            # capacity loss of the offline benchmark and restpg
//   assert_invariants = true
//   empty_tolerance = 1e-12
//   record_stride = 1
//   parallel = true
//
//   [workload]
//   kind = synthetic-gamma    # synthetic-gamma | example1 | trace-csv | adversary | fuzz
//   T = 60000
//   seed = 7
//   sla = 0.2, 0.3, 0.5       # trace-csv also accepts `mean-load`
//   shape = 2000              # synthetic-gamma
//   period = 2*, 3 sla        # optional, repeated; * marks the bulk user, then sla | uniform
//   path = trace.csv          # trace-csv, relative to the config file
//   N = 4                     # fuzz
//   p = 0.5                   # fuzz
//   mean = 0.5                # fuzz
//
//   [policy alg2]             # label; the type defaults to the label
//   type = alg2
//   epsilon = 0.02
//   eta = 1/3
//
//   [metrics]
//   work_difference = alg2:restpg, pg:alg2
//   sla_window = alg2
//   tau = 500
//   stride = 100              # defaults to 1 up to T = 20000, then ceil(T / 20000)
//   queue_norms = static, po, alg2, owm

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mwsla/policies.hpp"
#include "mwsla/workloads.hpp"

namespace mwsla {

struct WorkloadSpec {
  std::string kind;
  std::size_t steps = 0;
  std::uint64_t seed = 1;
  std::vector<double> sla;  // empty: the kind's default
  bool sla_from_mean_load = false;
  double shape = 2000.0;
  std::vector<GammaPeriod> periods;
  std::filesystem::path path;
  std::size_t users = 0;
  double probability = 0.5;
  std::optional<double> mean;  // fuzz; defaults to 2 / N
};

struct MetricsSpec {
  std::vector<std::pair<std::string, std::string>> work_difference;
  std::optional<std::string> sla_window;
  std::size_t tau = 500;
  std::optional<std::size_t> stride;
  std::vector<std::string> queue_norms;
};

struct ExperimentConfig {
  std::filesystem::path source;  // the file read, if any
  std::filesystem::path output_dir = "out";
  double epsilon = 0.02;
  bool assert_invariants = false;
  double empty_tolerance = kDefaultEmptyTolerance;
  std::size_t record_stride = 1;
  bool parallel = true;

  WorkloadSpec workload;
  std::vector<PolicySpec> policies;
  MetricsSpec metrics;

  const PolicySpec* find_policy(const std::string& label) const;
};

struct Diagnostics {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

// Best-effort parse; every problem is appended to `diag`.
ExperimentConfig parse_config(const std::string& text, Diagnostics& diag,
                              const std::filesystem::path& source = {});

// Semantic checks (every violation is reported, not just the first).
void validate_config(const ExperimentConfig& config, Diagnostics& diag);

// Reads, parses and validates. Throws IoError if unreadable and ConfigError
// listing every error otherwise.
ExperimentConfig load_config(const std::filesystem::path& path, Diagnostics* diag = nullptr);

// The SLA the workload runs with (after defaults and `mean-load`).
SlaVector resolve_sla(const ExperimentConfig& config, const LoadMatrix* loads = nullptr);

// Materializes the workload's load matrix. Not available for the adversary.
LoadMatrix build_loads(const ExperimentConfig& config);

}  // namespace mwsla
