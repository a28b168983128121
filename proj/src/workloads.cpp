#include "mwsla/workloads.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mwsla/errors.hpp"
#include "text.hpp"

namespace mwsla {

namespace {

void check_gamma(const GammaParams& params) {
  if (!(params.shape > 0.0) || !(params.scale > 0.0) || !std::isfinite(params.shape) ||
      !std::isfinite(params.scale)) {
    throw DomainError("Gamma shape and scale must be positive");
  }
}

// Per-user steady means of one period.
std::vector<double> period_means(const GammaPeriod& period, const SlaVector& sla) {
  std::vector<double> means(sla.users(), 0.0);
  double mass = 0.0;
  for (std::size_t u : period.users) mass += sla[u];
  for (std::size_t u : period.users) {
    if (period.sla_proportional) {
      if (!(mass > 0.0)) throw ConfigError("period users have zero total SLA");
      means[u] = sla[u] / mass;
    } else {
      means[u] = 1.0 / static_cast<double>(period.users.size());
    }
  }
  return means;
}

std::size_t period_length(const SlaVector& sla, const SyntheticGammaConfig& config,
                          const std::vector<GammaPeriod>& periods) {
  if (periods.empty()) throw ConfigError("synthetic-gamma needs at least one period");
  if (config.steps == 0 || config.steps % periods.size() != 0) {
    throw ConfigError("synthetic-gamma: T=" + std::to_string(config.steps) +
                      " is not divisible by the number of periods (" +
                      std::to_string(periods.size()) + ")");
  }
  if (!(config.shape > 0.0)) throw ConfigError("synthetic-gamma: shape must be positive");
  for (const auto& p : periods) {
    if (p.users.empty()) throw ConfigError("synthetic-gamma: period without users");
    for (std::size_t u : p.users) {
      if (u >= sla.users()) {
        throw ConfigError("synthetic-gamma: period references user " + std::to_string(u + 1) +
                          " but N=" + std::to_string(sla.users()));
      }
    }
    if (p.bulk_user && std::find(p.users.begin(), p.users.end(), *p.bulk_user) == p.users.end()) {
      throw ConfigError("synthetic-gamma: bulk user must be one of the period's users");
    }
  }
  return config.steps / periods.size();
}

const std::vector<GammaPeriod>& schedule_of(const SyntheticGammaConfig& config,
                                            const SlaVector& sla,
                                            std::vector<GammaPeriod>& storage) {
  if (!config.periods.empty()) return config.periods;
  if (sla.users() != 3) {
    throw ConfigError("synthetic-gamma: the default schedule needs N=3; supply periods for N=" +
                      std::to_string(sla.users()));
  }
  storage = default_gamma_schedule();
  return storage;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

double sample_gamma(const GammaParams& params, std::mt19937_64& rng) {
  check_gamma(params);
  return std::gamma_distribution<double>(params.shape, params.scale)(rng);
}

std::vector<GammaPeriod> default_gamma_schedule() {
  return {
      {{1, 2}, 1, true},        {{0, 1}, 0, true},        {{0, 2}, 0, true},
      {{1, 2}, std::nullopt, false}, {{0, 1}, std::nullopt, false}, {{0, 2}, std::nullopt, false},
  };
}

LoadMatrix synthetic_gamma(const SlaVector& sla, const SyntheticGammaConfig& config) {
  std::vector<GammaPeriod> storage;
  const auto& periods = schedule_of(config, sla, storage);
  const std::size_t length = period_length(sla, config, periods);
  const std::size_t n = sla.users();
  const double k = config.shape;

  std::mt19937_64 rng(config.seed);
  LoadMatrix loads(config.steps, n);
  for (std::size_t p = 0; p < periods.size(); ++p) {
    const GammaPeriod& period = periods[p];
    const std::vector<double> means = period_means(period, sla);
    const std::size_t first = p * length;
    for (std::size_t k_row = first; k_row < first + length; ++k_row) {
      auto row = loads.row(k_row);
      if (period.bulk_user && k_row == first) {
        const std::size_t b = *period.bulk_user;
        row[b] = static_cast<double>(length) * sample_gamma({k, means[b] / k}, rng);
        continue;
      }
      for (std::size_t u : period.users) {
        if (period.bulk_user && u == *period.bulk_user) continue;
        row[u] = sample_gamma({k, means[u] / k}, rng);
      }
    }
  }
  return loads;
}

LoadMoments synthetic_gamma_moments(const SlaVector& sla, const SyntheticGammaConfig& config) {
  std::vector<GammaPeriod> storage;
  const auto& periods = schedule_of(config, sla, storage);
  const double length = static_cast<double>(period_length(sla, config, periods));
  LoadMoments out;
  for (const auto& period : periods) {
    const std::vector<double> means = period_means(period, sla);
    for (std::size_t u : period.users) {
      const double m = means[u];
      if (period.bulk_user && u == *period.bulk_user) {
        out.mean += length * m;
        out.variance += length * length * m * m / config.shape;
      } else {
        const double draws = period.bulk_user ? length - 1.0 : length;
        out.mean += draws * m;
        out.variance += draws * m * m / config.shape;
      }
    }
  }
  return out;
}

LoadMatrix example1_instance(std::size_t steps) {
  if (steps == 0 || steps % 3 != 0) {
    throw ConfigError("example1: T=" + std::to_string(steps) + " is not a positive multiple of 3");
  }
  LoadMatrix loads(steps, 3);
  const std::size_t third = steps / 3;
  for (std::size_t k = 0; k < steps; ++k) {
    const bool first_user = k < third || k >= 2 * third;
    loads.at(k, 0) = first_user ? 1.0 : 0.0;
    loads.at(k, 1) = loads.at(k, 2) = 1.0 - loads.at(k, 0);
  }
  return loads;
}

LoadMatrix fuzz_loads(const FuzzLoadConfig& config) {
  if (config.users == 0) throw ConfigError("fuzz: N must be positive");
  if (!(config.probability >= 0.0 && config.probability <= 1.0)) {
    throw ConfigError("fuzz: p must lie in [0, 1]");
  }
  if (!(config.mean > 0.0)) throw ConfigError("fuzz: mean must be positive");
  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution demand(config.probability);
  std::gamma_distribution<double> size(2.0, config.mean / 2.0);
  LoadMatrix loads(config.steps, config.users);
  for (std::size_t k = 0; k < config.steps; ++k) {
    for (double& v : loads.row(k)) v = demand(rng) ? size(rng) : 0.0;
  }
  return loads;
}

LoadMatrix parse_trace_csv(const std::string& contents) {
  std::istringstream in(contents);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");

  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 2 || text::trim(header[0]) != "t") {
    throw ParseError(1, "header must be t,user1,...,userN");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (text::trim(header[i]) != "user" + std::to_string(i)) {
      throw ParseError(1, "header column " + std::to_string(i + 1) + " must be user" +
                              std::to_string(i));
    }
  }
  const std::size_t n = header.size() - 1;

  LoadMatrix loads;
  std::vector<double> row(n);
  std::size_t line_no = 1;
  std::size_t blank_since = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty()) {
      if (!blank_since) blank_since = line_no;
      continue;
    }
    if (blank_since) throw ParseError(blank_since, "blank line inside the trace");
    const auto cells = text::split(body, ',');
    if (cells.size() != n + 1) {
      throw ParseError(line_no, "expected " + std::to_string(n + 1) + " fields, got " +
                                    std::to_string(cells.size()));
    }
    std::size_t t = 0;
    const auto tcell = text::trim(cells[0]);
    const auto res = std::from_chars(tcell.data(), tcell.data() + tcell.size(), t);
    if (tcell.empty() || res.ec != std::errc() || res.ptr != tcell.data() + tcell.size()) {
      throw ParseError(line_no, "step index is not an integer");
    }
    if (t != loads.steps() + 1) {
      throw ParseError(line_no, "expected step " + std::to_string(loads.steps() + 1) + ", got " +
                                    std::to_string(t));
    }
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      if (!text::parse_double(cells[i + 1], v) || !std::isfinite(v)) {
        throw ParseError(line_no, "user" + std::to_string(i + 1) + " is not a number");
      }
      if (v < 0.0) throw ParseError(line_no, "user" + std::to_string(i + 1) + " is negative");
      row[i] = v;
    }
    loads.append_row(row);
  }
  if (loads.steps() == 0) throw ParseError(line_no, "no steps");
  return loads;
}

LoadMatrix read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str());
}

std::string format_trace_csv(const LoadMatrix& loads) {
  std::string out = "t";
  for (std::size_t i = 1; i <= loads.users(); ++i) out += ",user" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < loads.steps(); ++k) {
    out += std::to_string(k + 1);
    for (double v : loads.row(k)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const LoadMatrix& loads) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_trace_csv(loads);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mwsla
