#include "mwsla/offline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mwsla/errors.hpp"

namespace mwsla {

namespace {

void check_capacity(double capacity) {
  if (!(capacity > 0.0 && capacity <= 1.0)) {
    throw DomainError("capacity must lie in (0, 1]");
  }
}

SlaVector uniform_sla(std::size_t users) {
  return SlaVector(std::vector<double>(users, 1.0 / static_cast<double>(users)));
}

}  // namespace

std::size_t offline_optimal_switch(const LoadMatrix& loads, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  const std::size_t steps = loads.steps();
  const double rate = 1.0 - epsilon;
  double prefix = 0.0;
  double best = rate * static_cast<double>(steps);
  std::size_t argbest = 0;
  for (std::size_t t = 1; t <= steps; ++t) {
    for (double v : loads.row(t - 1)) prefix += v;
    const double value = prefix + rate * static_cast<double>(steps - t);
    if (value < best) {
      best = value;
      argbest = t;
    }
  }
  return argbest;
}

double offline_optimal_value(const LoadMatrix& loads, double epsilon) {
  const std::size_t s = offline_optimal_switch(loads, epsilon);
  double prefix = 0.0;
  for (std::size_t t = 0; t < s; ++t) {
    for (double v : loads.row(t)) prefix += v;
  }
  return prefix + (1.0 - epsilon) * static_cast<double>(loads.steps() - s);
}

SimulationTrace simple_greedy(const LoadMatrix& loads, double capacity, std::size_t stride) {
  check_capacity(capacity);
  const std::size_t n = loads.users();
  SimulationTrace trace(uniform_sla(n), "greedy", {}, stride);
  trace.params["capacity"] = std::to_string(capacity);
  std::vector<double> queue(n, 0.0), work(n), next(n);
  for (std::size_t t = 1; t <= loads.steps(); ++t) {
    const ActiveSet active = feedback(queue);
    auto load = loads.row(t - 1);
    double left = capacity;
    for (std::size_t i = 0; i < n; ++i) {
      const double pending = queue[i] + load[i];
      work[i] = std::min(pending, left);
      left -= work[i];
      next[i] = pending - work[i];
    }
    trace.append(t, active, work, work, next, load);
    queue.swap(next);
  }
  return trace;
}

SimulationTrace proportional_greedy(const LoadMatrix& loads, const SlaVector& sla,
                                    double capacity, std::size_t stride) {
  check_capacity(capacity);
  const std::size_t n = loads.users();
  if (sla.users() != n) throw StructuralError("SLA and loads disagree on N");
  SimulationTrace trace(sla, capacity == 1.0 ? "pg" : "restpg", {}, stride);
  trace.params["capacity"] = std::to_string(capacity);

  std::vector<double> queue(n, 0.0), work(n), remaining(n);
  std::vector<std::size_t> pending;
  pending.reserve(n);
  for (std::size_t t = 1; t <= loads.steps(); ++t) {
    const ActiveSet active = feedback(queue);
    auto load = loads.row(t - 1);
    std::fill(work.begin(), work.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = queue[i] + load[i];
    double left = capacity;

    while (left > 0.0) {
      pending.clear();
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (remaining[i] > 0.0) {
          pending.push_back(i);
          mass += sla[i];
        }
      }
      if (pending.empty()) break;
      if (!(mass > 0.0)) {
        throw DegenerateSlaError("proportional greedy: all users with pending work have zero SLA (t=" +
                                 std::to_string(t) + ")");
      }
      // Smallest remaining-to-SLA ratio; zero-SLA users never come first.
      std::size_t first = pending.front();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i : pending) {
        if (sla[i] <= 0.0) continue;
        const double ratio = remaining[i] / sla[i];
        if (ratio < best) {
          best = ratio;
          first = i;
        }
      }
      const double offer = sla[first] / mass * left;
      if (remaining[first] <= offer) {
        work[first] += remaining[first];
        left -= remaining[first];
        remaining[first] = 0.0;
        continue;
      }
      for (std::size_t i : pending) {
        const double share = std::min(remaining[i], sla[i] / mass * left);
        work[i] += share;
        remaining[i] -= share;
      }
      left = 0.0;
    }
    trace.append(t, active, work, work, remaining, load);
    queue = remaining;
  }
  return trace;
}

void check_dual_feasible(const DualSolution& dual, double tolerance) {
  const std::size_t steps = dual.steps, n = dual.users;
  if (dual.gamma.size() != steps * n || dual.beta.size() != steps) {
    throw StructuralError("dual solution has inconsistent dimensions");
  }
  auto fail = [](const std::string& what, std::size_t t, std::size_t i) {
    std::ostringstream os;
    os << "infeasible dual: " << what << " at t=" << t << ", user " << i;
    throw InvariantViolation(os.str());
  };
  for (std::size_t k = 0; k < steps; ++k) {
    if (dual.beta[k] < -tolerance) fail("beta_t >= 0", k + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = dual.gamma_at(k, i);
      if (g < -tolerance) fail("gamma_t(i) >= 0", k + 1, i + 1);
      if (g + dual.beta[k] < 1.0 - tolerance) fail("gamma_t(i) + beta_t >= 1", k + 1, i + 1);
      if (k + 1 < steps && g < dual.gamma_at(k + 1, i) - tolerance) {
        fail("gamma_t(i) >= gamma_{t+1}(i)", k + 1, i + 1);
      }
    }
  }
}

double dual_value(const DualSolution& dual, const LoadMatrix& loads) {
  if (loads.steps() != dual.steps || loads.users() != dual.users) {
    throw StructuralError("dual solution and loads disagree on shape");
  }
  check_dual_feasible(dual);
  double value = 0.0;
  for (std::size_t k = 0; k < dual.steps; ++k) {
    auto row = loads.row(k);
    for (std::size_t i = 0; i < dual.users; ++i) value += row[i] * dual.gamma_at(k, i);
    value += (1.0 - dual.epsilon) * dual.beta[k];
  }
  return value;
}

DualSolution switch_dual(std::size_t s, std::size_t steps, std::size_t users, double epsilon) {
  if (s > steps) throw StructuralError("switch point beyond the horizon");
  DualSolution dual;
  dual.steps = steps;
  dual.users = users;
  dual.epsilon = epsilon;
  dual.gamma.assign(steps * users, 0.0);
  dual.beta.assign(steps, 1.0);
  std::fill(dual.gamma.begin(), dual.gamma.begin() + static_cast<std::ptrdiff_t>(s * users), 1.0);
  std::fill(dual.beta.begin(), dual.beta.begin() + static_cast<std::ptrdiff_t>(s), 0.0);
  return dual;
}

}  // namespace mwsla
