#pragma once

// Reference implementations used only by the tests. Each one is written
// from the defining formula and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// argmin_{x in truncated simplex} KL(x || y) by bisection on the scale c of
// x(i) = max(eps/N, c y(i)); the coordinate sum is monotone in c.
inline std::vector<double> project(const std::vector<double>& y, double eps) {
  const double floor = eps / static_cast<double>(y.size());
  auto mass = [&](double c) {
    double s = 0.0;
    for (double v : y) s += std::max(floor, c * v);
    return s;
  };
  double lo = 0.0, hi = 1.0 / std::accumulate(y.begin(), y.end(), 0.0);
  while (mass(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) < 1.0 ? lo : hi) = mid;
  }
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::max(floor, hi * y[i]);
  // Spread the bisection residual over the unclipped coordinates.
  const double excess = mass(hi) - 1.0;
  double free_mass = 0.0;
  for (double v : x) {
    if (v > floor) free_mass += v;
  }
  for (double& v : x) {
    if (v > floor) v -= excess * v / free_mass;
  }
  return x;
}

inline double kl(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) s += x[i] * std::log(x[i] / y[i]);
  }
  return s;
}

// Uniformly random point of the truncated simplex.
inline std::vector<double> random_feasible(std::size_t n, double eps, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> z(n);
  double s = 0.0;
  for (double& v : z) s += (v = e(rng));
  for (double& v : z) v = eps / static_cast<double>(n) + (1.0 - eps) * v / s;
  return z;
}

// Total work of the best offline schedule: with one shared pool of capacity
// c per step the aggregate queue is a single fluid queue, and serving it
// greedily is optimal.
inline double aggregate_greedy(const std::vector<std::vector<double>>& loads, double capacity) {
  double queue = 0.0, work = 0.0;
  for (const auto& row : loads) {
    const double pending = queue + std::accumulate(row.begin(), row.end(), 0.0);
    const double w = std::min(capacity, pending);
    work += w;
    queue = pending - w;
  }
  return work;
}

// One multiplicative-weight step written straight from the update rule.
inline std::vector<double> mw_step(const std::vector<double>& h, const std::vector<bool>& active,
                                   const std::vector<double>& beta, double eps, double eta,
                                   double lambda, bool proportional) {
  const std::size_t n = h.size();
  double active_beta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) active_beta += beta[i];
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    if (active[i]) {
      const double threshold =
          proportional ? (active_beta > 0 ? (1 - eps) * beta[i] / active_beta : 0.0) : beta[i];
      g = h[i] < threshold ? 1.0 + lambda : 1.0;
    }
    y[i] = h[i] * std::exp(eta * g);
  }
  return project(y, eps);
}

// Work a static beta allocation does per user over steps [from, from + len)
// starting from queue q.
inline std::vector<double> static_window(const std::vector<std::vector<double>>& loads,
                                         std::vector<double> q, const std::vector<double>& beta,
                                         std::size_t from, std::size_t len) {
  std::vector<double> done(q.size(), 0.0);
  for (std::size_t k = from; k < from + len; ++k) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double w = std::min(beta[i], q[i] + loads[k][i]);
      done[i] += w;
      q[i] = q[i] + loads[k][i] - w;
    }
  }
  return done;
}

}  // namespace oracle
