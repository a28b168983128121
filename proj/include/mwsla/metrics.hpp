#pragma once

// Post-hoc analysis of simulation traces. Series follow the trace's retained
// steps, so a strided trace yields a strided series.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mwsla/core.hpp"

namespace mwsla {

struct SeriesReport {
  std::string name;
  std::vector<std::size_t> steps;
  std::vector<double> values;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return values.size(); }
  double back() const { return values.back(); }
};

// sum_{s<=t} sum_i w_s(i).
SeriesReport cumulative_work(const SimulationTrace& trace);

// cumulative_work(a) - cumulative_work(b). Throws StructuralError unless both
// traces cover the same horizon, N and stride.
SeriesReport work_difference(const SimulationTrace& a, const SimulationTrace& b);

// sqrt(sum_i Q(i)^2) of the queue left after each retained step.
SeriesReport queue_two_norm(const SimulationTrace& trace);

struct NormSummary {
  double time_average = 0.0;
  double max = 0.0;
};
NormSummary summarize(const SeriesReport& series);

// r_i(t) = (work a Static run started from the algorithm's Q_t would do for
// user i over [t, t + tau)) - (the algorithm's work for i over that window),
// for t = 1, 1 + stride, ... with t + tau - 1 <= T.
struct SlaWindowStats {
  std::size_t tau = 0;
  std::size_t stride = 1;
  std::size_t windows = 0;
  std::vector<double> min, max, mean, std;  // per user; std is the population deviation
  std::vector<std::size_t> steps;           // window starts
  std::vector<double> series;               // windows x users, row-major
};

// 1 for T <= 20000, else ceil(T / 20000).
std::size_t default_window_stride(std::size_t steps);

// `alg` must be recorded with stride 1. Throws ConfigError for tau = 0,
// tau > T or stride = 0, and StructuralError on shape mismatches.
SlaWindowStats sla_window_stats(const SimulationTrace& alg, const LoadMatrix& loads,
                                const SlaVector& sla, std::size_t tau, std::size_t stride);

// Empirical check of the queue comparison against a policy that never
// exceeds the SLA: Q_T(i) <= Q'_T(i) + C sqrt(T) ln T. The fitted constant is
// the smallest C that works for every user; the implied one comes from the
// per-user work guarantee 2 eps beta(i) T + beta(i) s~ with
// s~ = 32 N^2 ln(N / eps) / (eps^3 eta).
struct QueueGapCheck {
  std::vector<double> gap;  // Q_T(i) - Q'_T(i)
  double fitted_constant = 0.0;
  double implied_constant = 0.0;
  bool holds() const { return fitted_constant <= implied_constant; }
};
QueueGapCheck queue_gap_check(const SimulationTrace& alg, const SimulationTrace& comparator,
                              double epsilon, double eta);

}  // namespace mwsla
