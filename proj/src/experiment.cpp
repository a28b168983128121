#include "mwsla/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "mwsla/errors.hpp"
#include "mwsla/offline.hpp"
#include "mwsla/policies.hpp"
#include "mwsla/workloads.hpp"
#include "text.hpp"

namespace mwsla {

namespace {

constexpr double kConservationTolerance = 1e-9;
constexpr double kOptimumSlack = 1e-9;  // relative

struct OnlineRun {
  SimulationTrace trace;
  std::optional<std::size_t> checks;
  std::optional<std::size_t> violations;
};

void check_monitor(const std::string& label, const Policy& policy, bool asserted,
                   OnlineRun& run) {
  const auto* mw = dynamic_cast<const MwPolicy*>(&policy);
  if (!mw || !asserted) return;
  const GrowthMonitor& m = mw->monitor();
  run.checks = m.checks;
  run.violations = m.violation_count;
  if (m.violation_count == 0) return;
  const GrowthViolation& v = m.violations.front();
  std::ostringstream os;
  os << "policy " << label << ": " << m.violation_count << " growth-check violation(s); first: "
     << v.check << " at step " << v.step << ", user " << v.user + 1 << " (" << v.observed
     << " < " << v.bound << ")";
  throw InvariantViolation(os.str());
}

OnlineRun run_online(const PolicySpec& spec, const SlaVector& sla,
                     std::shared_ptr<const LoadMatrix> loads, const ExperimentConfig& config) {
  auto policy = make_policy(spec, sla, config.assert_invariants);
  MatrixLoadSource source(std::move(loads));
  RunOptions options;
  options.empty_tolerance = config.empty_tolerance;
  options.stride = config.record_stride;
  OnlineRun run{simulate(*policy, source, sla, config.workload.steps, options), {}, {}};
  check_monitor(spec.label, *policy, config.assert_invariants, run);
  return run;
}

double capacity_of(const PolicySpec& spec, double epsilon) {
  auto param = [&](const char* key) {
    return text::parse_real(spec.params.at(key), spec.label + "." + key);
  };
  if (spec.params.count("capacity")) return param("capacity");
  if (spec.type == "restpg") {
    return 1.0 - (spec.params.count("epsilon") ? param("epsilon") : epsilon);
  }
  return 1.0;
}

SimulationTrace run_offline(const PolicySpec& spec, const SlaVector& sla, const LoadMatrix& loads,
                            const ExperimentConfig& config) {
  const double capacity = capacity_of(spec, config.epsilon);
  if (spec.type == "greedy") return simple_greedy(loads, capacity, config.record_stride);
  return proportional_greedy(loads, sla, capacity, config.record_stride);
}

void check_conservation(const std::string& label, const SimulationTrace& trace) {
  double queued = 0.0, initial = 0.0;
  for (double q : trace.final_queue()) queued += q;
  for (double q : trace.initial_queue()) initial += q;
  const double load = trace.total_load();
  const double residual = trace.total_work() + queued - initial - load;
  if (std::abs(residual) > kConservationTolerance * std::max(1.0, load)) {
    std::ostringstream os;
    os << "policy " << label << ": work + final queue differs from the load by " << residual;
    throw InvariantViolation(os.str());
  }
}

std::string join(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_number(values[i]);
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string series_csv(const SeriesReport& s) {
  std::string out = "t,value\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    out += std::to_string(s.steps[k]);
    out += ',';
    out += format_number(s.values[k]);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const PolicyResult* RunSummary::find(const std::string& label) const {
  for (const auto& p : policies) {
    if (p.label == label) return &p;
  }
  return nullptr;
}

std::string RunSummary::to_text() const {
  std::ostringstream os;
  os << "workload=" << workload << '\n'
     << "T=" << steps << '\n'
     << "N=" << users << '\n'
     << "sla=" << join(sla) << '\n'
     << "epsilon=" << format_number(epsilon) << '\n'
     << "offline_optimal_eps0=" << format_number(offline_optimal_eps0) << '\n'
     << "offline_optimal_eps=" << format_number(offline_optimal_eps) << '\n';
  for (const auto& p : policies) {
    const std::string key = "policy." + p.label + ".";
    os << key << "type=" << p.type << '\n'
       << key << "total_work=" << format_number(p.total_work) << '\n'
       << key << "final_queue_l1=" << format_number(p.final_queue_l1) << '\n'
       << key << "final_queue_l2=" << format_number(p.final_queue_l2) << '\n'
       << key << "gap_to_optimum=" << format_number(offline_optimal_eps0 - p.total_work) << '\n';
    if (p.monitor_checks) os << key << "monitor_checks=" << *p.monitor_checks << '\n';
    if (p.monitor_violations) os << key << "monitor_violations=" << *p.monitor_violations << '\n';
  }
  if (adversary) {
    os << "adversary.phases=" << adversary->phases << '\n'
       << "adversary.backlog=" << format_number(adversary->backlog) << '\n'
       << "adversary.bound=" << format_number(adversary->bound) << '\n';
  }
  os << "wall_clock_seconds=" << format_number(wall_clock_seconds) << '\n';
  return os.str();
}

const SimulationTrace& ExperimentResult::trace(const std::string& label) const {
  for (const auto& t : traces) {
    if (t.label == label) return t.trace;
  }
  throw StructuralError("no trace labelled '" + label + "'");
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const WorkloadSpec& w = config.workload;
  ExperimentResult result;
  std::vector<std::optional<OnlineRun>> online(config.policies.size());
  std::optional<SlaVector> sla;

  if (w.kind == "adversary") {
    sla = resolve_sla(config);
    std::size_t index = 0;
    while (index < config.policies.size() && !is_online_policy(config.policies[index].type)) {
      ++index;
    }
    if (index == config.policies.size()) {
      throw ConfigError("the adversary workload needs one online policy");
    }
    const PolicySpec& spec = config.policies[index];
    auto policy = make_policy(spec, *sla, config.assert_invariants);
    AdversarialLoadSource source(policy->clone(), w.steps, config.empty_tolerance);
    RunOptions options;
    options.empty_tolerance = config.empty_tolerance;
    options.stride = config.record_stride;
    OnlineRun run{simulate(*policy, source, *sla, w.steps, options), {}, {}};
    check_monitor(spec.label, *policy, config.assert_invariants, run);
    online[index] = std::move(run);
    result.loads = source.emitted();
    result.summary.adversary =
        AdversaryReport{source.phases().size(), source.backlog(),
                        std::sqrt(static_cast<double>(w.steps) / 40.0)};
  } else {
    result.loads = build_loads(config);
    sla = resolve_sla(config, &result.loads);
    if (sla->users() != result.loads.users()) {
      throw ConfigError("workload.sla has " + std::to_string(sla->users()) +
                        " entries but the loads have " + std::to_string(result.loads.users()) +
                        " users");
    }
    ExperimentConfig effective = config;
    effective.workload.steps = result.loads.steps();
    auto shared = std::make_shared<const LoadMatrix>(result.loads);

    std::vector<std::future<OnlineRun>> pending(config.policies.size());
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
      if (!is_online_policy(config.policies[i].type)) continue;
      pending[i] = std::async(config.parallel ? std::launch::async : std::launch::deferred,
                              run_online, std::cref(config.policies[i]), std::cref(*sla), shared,
                              std::cref(effective));
    }
    // get() rethrows the first failure in config order.
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].valid()) online[i] = pending[i].get();
    }
  }

  const LoadMatrix& loads = result.loads;
  RunSummary& summary = result.summary;
  summary.workload = w.kind;
  summary.steps = loads.steps();
  summary.users = loads.users();
  summary.sla.assign(sla->values().begin(), sla->values().end());
  summary.epsilon = config.epsilon;
  summary.offline_optimal_eps0 = offline_optimal_value(loads, 0.0);
  summary.offline_optimal_eps = offline_optimal_value(loads, config.epsilon);

  for (std::size_t i = 0; i < config.policies.size(); ++i) {
    const PolicySpec& spec = config.policies[i];
    PolicyResult pr;
    pr.label = spec.label;
    pr.type = spec.type;
    if (online[i]) {
      pr.monitor_checks = online[i]->checks;
      pr.monitor_violations = online[i]->violations;
      result.traces.push_back({spec.label, std::move(online[i]->trace)});
    } else if (is_offline_policy(spec.type)) {
      result.traces.push_back({spec.label, run_offline(spec, *sla, loads, config)});
    } else {
      continue;
    }
    const SimulationTrace& trace = result.traces.back().trace;
    check_conservation(spec.label, trace);
    pr.total_work = trace.total_work();
    double sq = 0.0;
    for (double q : trace.final_queue()) {
      pr.final_queue_l1 += q;
      sq += q * q;
    }
    pr.final_queue_l2 = std::sqrt(sq);
    const double slack = kOptimumSlack * std::max(1.0, summary.offline_optimal_eps0);
    if (pr.total_work > summary.offline_optimal_eps0 + slack) {
      std::ostringstream os;
      os << std::setprecision(17) << "policy " << spec.label << " did " << pr.total_work
         << " work, above the offline optimum " << summary.offline_optimal_eps0;
      throw InvariantViolation(os.str());
    }
    summary.policies.push_back(pr);
  }

  for (const auto& t : result.traces) {
    result.cumulative.push_back(cumulative_work(t.trace));
    result.cumulative.back().name = "cumulative_work_" + t.label;
  }
  for (const auto& [a, b] : config.metrics.work_difference) {
    result.differences.push_back(work_difference(result.trace(a), result.trace(b)));
    result.differences.back().name = "work_difference_" + a + "_minus_" + b;
  }
  for (const auto& label : config.metrics.queue_norms) {
    result.queue_norms.push_back(queue_two_norm(result.trace(label)));
    result.queue_norms.back().name = "queue_norm_" + label;
  }
  if (config.metrics.sla_window) {
    result.window_policy = *config.metrics.sla_window;
    const std::size_t stride =
        config.metrics.stride.value_or(default_window_stride(loads.steps()));
    result.window = sla_window_stats(result.trace(result.window_policy), loads, *sla,
                                     config.metrics.tau, stride);
  }

  summary.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  for (const auto* group : {&result.cumulative, &result.differences, &result.queue_norms}) {
    for (const auto& s : *group) write_file(dir / (s.name + ".csv"), series_csv(s));
  }
  if (result.window) {
    const SlaWindowStats& w = *result.window;
    const std::size_t n = w.min.size();
    std::string header = "t";
    for (std::size_t i = 1; i <= n; ++i) header += ",user" + std::to_string(i);
    std::string series = header + '\n';
    for (std::size_t k = 0; k < w.windows; ++k) {
      series += std::to_string(w.steps[k]);
      for (std::size_t i = 0; i < n; ++i) series += ',' + format_number(w.series[k * n + i]);
      series += '\n';
    }
    write_file(dir / ("sla_window_" + result.window_policy + "_series.csv"), series);

    std::string stats = "user,min,max,mean,std,tau,stride,windows\n";
    for (std::size_t i = 0; i < n; ++i) {
      stats += std::to_string(i + 1) + ',' + format_number(w.min[i]) + ',' +
               format_number(w.max[i]) + ',' + format_number(w.mean[i]) + ',' +
               format_number(w.std[i]) + ',' + std::to_string(w.tau) + ',' +
               std::to_string(w.stride) + ',' + std::to_string(w.windows) + '\n';
    }
    write_file(dir / ("sla_window_" + result.window_policy + "_stats.csv"), stats);
  }
  write_file(dir / "loads.csv", format_trace_csv(result.loads));

  std::string summary = result.summary.to_text();
  for (const auto& s : result.queue_norms) {
    const NormSummary ns = summarize(s);
    const std::string label = s.name.substr(std::string("queue_norm_").size());
    summary += "queue_norm." + label + ".time_average=" + format_number(ns.time_average) + '\n';
    summary += "queue_norm." + label + ".max=" + format_number(ns.max) + '\n';
  }
  for (const auto& s : result.differences) {
    summary += s.name + ".final=" + format_number(s.values.empty() ? 0.0 : s.back()) + '\n';
  }
  if (result.window) {
    const std::string key = "sla_window." + result.window_policy + ".";
    for (std::size_t i = 0; i < result.window->mean.size(); ++i) {
      summary += key + "user" + std::to_string(i + 1) + ".mean=" +
                 format_number(result.window->mean[i]) + '\n';
    }
  }
  write_file(dir / "summary", summary);
}

}  // namespace mwsla
