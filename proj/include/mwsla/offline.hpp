#pragma once

// Offline oracles for the maximum-work problem with per-step capacity 1 - eps:
//
//   (P)  max sum_{t,i} w_t(i)
//        s.t. sum_{s<=t} w_s(i) <= sum_{s<=t} L_s(i),  sum_i w_t(i) <= 1 - eps,  w >= 0
//
//   (D)  min sum_{t,i} L_t(i) gamma_t(i) + (1 - eps) sum_t beta_t
//        s.t. gamma_t(i) + beta_t >= 1,  gamma_t(i) >= gamma_{t+1}(i),  gamma, beta >= 0
//
// The optimum has the closed form min_{0<=t<=T} (prefix load up to t + (1-eps)(T-t)).
// Two independent greedy schedulers attain it.

#include <cstddef>
#include <vector>

#include "mwsla/core.hpp"

namespace mwsla {

double offline_optimal_value(const LoadMatrix& loads, double epsilon);

// Index t in {0..T} attaining the minimum above (smallest on ties).
std::size_t offline_optimal_switch(const LoadMatrix& loads, double epsilon);

// Serves pending work user by user in index order until `capacity` is used up.
// `stride` is passed on to the returned trace.
SimulationTrace simple_greedy(const LoadMatrix& loads, double capacity, std::size_t stride = 1);

// Water-filling proportional to beta over users with pending work. Each round
// either fully serves the user with the smallest pending-to-SLA ratio (when it
// fits under its proportional offer) or splits what is left proportionally
// and ends the step. capacity = 1 gives PG, capacity = 1 - eps gives restPG.
// Throws DegenerateSlaError when users with pending work all have beta = 0.
SimulationTrace proportional_greedy(const LoadMatrix& loads, const SlaVector& sla,
                                    double capacity, std::size_t stride = 1);

struct DualSolution {
  std::size_t steps = 0;
  std::size_t users = 0;
  std::vector<double> gamma;  // steps x users, row-major
  std::vector<double> beta;   // per step
  double epsilon = 0.0;

  double gamma_at(std::size_t k, std::size_t i) const { return gamma[k * users + i]; }
};

// Throws InvariantViolation naming the first violated constraint.
void check_dual_feasible(const DualSolution& dual, double tolerance = 1e-12);

// Objective of (D); checks feasibility first.
double dual_value(const DualSolution& dual, const LoadMatrix& loads);

// gamma = 1, beta = 0 for t <= s; gamma = 0, beta = 1 after.
DualSolution switch_dual(std::size_t s, std::size_t steps, std::size_t users, double epsilon);

}  // namespace mwsla
