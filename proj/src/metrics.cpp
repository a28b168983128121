#include "mwsla/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mwsla/errors.hpp"

namespace mwsla {

namespace {

void require_same_shape(const SimulationTrace& a, const SimulationTrace& b) {
  if (a.horizon() != b.horizon()) {
    throw StructuralError("traces cover different horizons (" + std::to_string(a.horizon()) +
                          " vs " + std::to_string(b.horizon()) + ")");
  }
  if (a.users() != b.users()) throw StructuralError("traces disagree on N");
  if (a.stride() != b.stride()) throw StructuralError("traces use different strides");
}

SeriesReport empty_series(std::string name, const SimulationTrace& trace) {
  SeriesReport s;
  s.name = std::move(name);
  s.metadata["policy"] = trace.policy();
  s.metadata["stride"] = std::to_string(trace.stride());
  s.steps.reserve(trace.records());
  s.values.reserve(trace.records());
  return s;
}

}  // namespace

SeriesReport cumulative_work(const SimulationTrace& trace) {
  SeriesReport s = empty_series("cumulative_work_" + trace.policy(), trace);
  for (std::size_t k = 0; k < trace.records(); ++k) {
    const StepView v = trace.record(k);
    s.steps.push_back(v.t);
    s.values.push_back(v.cumulative_work);
  }
  return s;
}

SeriesReport work_difference(const SimulationTrace& a, const SimulationTrace& b) {
  require_same_shape(a, b);
  SeriesReport s = empty_series("work_difference_" + a.policy() + "_minus_" + b.policy(), a);
  s.metadata["minuend"] = a.policy();
  s.metadata["subtrahend"] = b.policy();
  for (std::size_t k = 0; k < a.records(); ++k) {
    const StepView va = a.record(k), vb = b.record(k);
    s.steps.push_back(va.t);
    s.values.push_back(va.cumulative_work - vb.cumulative_work);
  }
  return s;
}

SeriesReport queue_two_norm(const SimulationTrace& trace) {
  SeriesReport s = empty_series("queue_norm_" + trace.policy(), trace);
  for (std::size_t k = 0; k < trace.records(); ++k) {
    const StepView v = trace.record(k);
    double sq = 0.0;
    for (double q : v.queue_after) sq += q * q;
    s.steps.push_back(v.t);
    s.values.push_back(std::sqrt(sq));
  }
  return s;
}

NormSummary summarize(const SeriesReport& series) {
  NormSummary out;
  if (series.values.empty()) return out;
  double sum = 0.0;
  for (double v : series.values) {
    sum += v;
    out.max = std::max(out.max, v);
  }
  out.time_average = sum / static_cast<double>(series.values.size());
  return out;
}

std::size_t default_window_stride(std::size_t steps) {
  constexpr std::size_t kBudget = 20000;
  return steps <= kBudget ? 1 : (steps + kBudget - 1) / kBudget;
}

SlaWindowStats sla_window_stats(const SimulationTrace& alg, const LoadMatrix& loads,
                                const SlaVector& sla, std::size_t tau, std::size_t stride) {
  const std::size_t steps = alg.horizon(), n = alg.users();
  if (!alg.complete()) throw StructuralError("SLA window statistics need a stride-1 trace");
  if (loads.steps() != steps || loads.users() != n || sla.users() != n) {
    throw StructuralError("trace, loads and SLA disagree on shape");
  }
  if (tau == 0) throw ConfigError("sla_window: tau must be positive");
  if (tau > steps) {
    throw ConfigError("sla_window: tau=" + std::to_string(tau) + " exceeds T=" +
                      std::to_string(steps));
  }
  if (stride == 0) throw ConfigError("sla_window: stride must be positive");

  // prefix[k * n + i] = algorithm work of user i over steps 1..k.
  std::vector<long double> prefix((steps + 1) * n, 0.0L);
  for (std::size_t k = 0; k < steps; ++k) {
    auto w = alg.record(k).work;
    for (std::size_t i = 0; i < n; ++i) prefix[(k + 1) * n + i] = prefix[k * n + i] + w[i];
  }

  SlaWindowStats out;
  out.tau = tau;
  out.stride = stride;
  out.min.assign(n, std::numeric_limits<double>::infinity());
  out.max.assign(n, -std::numeric_limits<double>::infinity());
  out.mean.assign(n, 0.0);
  out.std.assign(n, 0.0);
  std::vector<long double> sum(n, 0.0L), sum_sq(n, 0.0L);
  std::vector<double> queue(n), done(n);

  for (std::size_t t = 1; t + tau - 1 <= steps; t += stride) {
    auto start = alg.queue_before(t - 1);
    std::copy(start.begin(), start.end(), queue.begin());
    std::fill(done.begin(), done.end(), 0.0);
    for (std::size_t r = t; r < t + tau; ++r) {
      auto load = loads.row(r - 1);
      for (std::size_t i = 0; i < n; ++i) {
        const double pending = load[i] + queue[i];
        const double w = std::min(sla[i], pending);
        done[i] += w;
        queue[i] = std::max(0.0, pending - sla[i]);
      }
    }
    out.steps.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      const double alg_work =
          static_cast<double>(prefix[(t + tau - 1) * n + i] - prefix[(t - 1) * n + i]);
      const double r = done[i] - alg_work;
      out.series.push_back(r);
      out.min[i] = std::min(out.min[i], r);
      out.max[i] = std::max(out.max[i], r);
      sum[i] += r;
      sum_sq[i] += static_cast<long double>(r) * r;
    }
  }
  out.windows = out.steps.size();
  const auto count = static_cast<long double>(out.windows);
  for (std::size_t i = 0; i < n; ++i) {
    const long double mean = sum[i] / count;
    out.mean[i] = static_cast<double>(mean);
    out.std[i] = static_cast<double>(std::sqrt(std::max(0.0L, sum_sq[i] / count - mean * mean)));
    // Rounding in the mean can leave it a hair outside [min, max].
    out.mean[i] = std::clamp(out.mean[i], out.min[i], out.max[i]);
  }
  return out;
}

QueueGapCheck queue_gap_check(const SimulationTrace& alg, const SimulationTrace& comparator,
                              double epsilon, double eta) {
  if (alg.horizon() != comparator.horizon() || alg.users() != comparator.users()) {
    throw StructuralError("traces disagree on shape");
  }
  if (!(epsilon > 0.0) || !(eta > 0.0)) throw DomainError("epsilon and eta must be positive");
  const double steps = static_cast<double>(alg.horizon());
  const double n = static_cast<double>(alg.users());
  const double scale = std::sqrt(steps) * std::log(steps);
  if (!(scale > 0.0)) throw DomainError("queue gap check needs T >= 2");
  const double s_tilde = 32.0 * n * n * std::log(n / epsilon) / (epsilon * epsilon * epsilon * eta);

  QueueGapCheck out;
  double worst_gap = 0.0, worst_bound = 0.0;
  for (std::size_t i = 0; i < alg.users(); ++i) {
    const double gap = alg.final_queue()[i] - comparator.final_queue()[i];
    out.gap.push_back(gap);
    worst_gap = std::max(worst_gap, gap);
    const double beta = alg.sla()[i];
    worst_bound = std::max(worst_bound, 2.0 * epsilon * beta * steps + beta * s_tilde);
  }
  out.fitted_constant = worst_gap / scale;
  out.implied_constant = worst_bound / scale;
  return out;
}

}  // namespace mwsla
