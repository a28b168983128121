#include "mwsla/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mwsla/errors.hpp"
#include "text.hpp"

namespace mwsla {

namespace {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line;
};

struct Section {
  std::string name;   // experiment | workload | policy | metrics
  std::string label;  // policy label
  std::size_t line = 0;
  std::vector<Entry> entries;
};

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::vector<Section> split_sections(const std::string& text, Diagnostics& diag) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        diag.errors.push_back(at_line(line_no) + "unterminated section header");
        continue;
      }
      const auto inner = text::trim(line.substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      const auto space = inner.find_first_of(" \t");
      s.name = std::string(inner.substr(0, space));
      if (space != std::string_view::npos) s.label = std::string(text::trim(inner.substr(space)));
      if (s.name != "experiment" && s.name != "workload" && s.name != "policy" &&
          s.name != "metrics") {
        diag.errors.push_back(at_line(line_no) + "unknown section [" + std::string(inner) + "]");
      } else if (s.name == "policy" && s.label.empty()) {
        diag.errors.push_back(at_line(line_no) + "policy section needs a label: [policy <label>]");
      } else if (s.name != "policy" && !s.label.empty()) {
        diag.errors.push_back(at_line(line_no) + "section [" + s.name + "] takes no label");
      }
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      diag.errors.push_back(at_line(line_no) + "expected key = value");
      continue;
    }
    if (sections.empty()) {
      diag.errors.push_back(at_line(line_no) + "key outside of any section");
      continue;
    }
    sections.back().entries.push_back({std::string(text::trim(line.substr(0, eq))),
                                       std::string(text::trim(line.substr(eq + 1))), line_no});
  }
  return sections;
}

// Converts one entry, turning ConfigError into a diagnostic.
template <class F>
void convert(const Entry& e, Diagnostics& diag, F&& f) {
  try {
    f();
  } catch (const ConfigError& err) {
    diag.errors.push_back(at_line(e.line) + err.what());
  }
}

bool parse_bool(const std::string& v, const std::string& field) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(field + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> parse_names(const std::string& v) {
  std::vector<std::string> out;
  for (auto part : text::split(v, ',')) {
    const auto name = text::trim(part);
    if (!name.empty()) out.emplace_back(name);
  }
  return out;
}

GammaPeriod parse_period(const std::string& v) {
  GammaPeriod p;
  std::string_view body = text::trim(v);
  const auto space = body.find_last_of(" \t");
  if (space != std::string_view::npos) {
    const auto mode = text::trim(body.substr(space));
    const bool named = mode.find_first_of("0123456789,*") == std::string_view::npos;
    if (named && mode != "sla" && mode != "uniform") {
      throw ConfigError("period: mean mode must be 'sla' or 'uniform', got '" + std::string(mode) +
                        "'");
    }
    if (named) {
      p.sla_proportional = mode == "sla";
      body = text::trim(body.substr(0, space));
    }
  }
  for (auto part : text::split(body, ',')) {
    auto item = text::trim(part);
    bool bulk = false;
    if (!item.empty() && item.back() == '*') {
      bulk = true;
      item = text::trim(item.substr(0, item.size() - 1));
    }
    const std::size_t user = text::parse_count(item, "period user");
    if (user == 0) throw ConfigError("period: users are numbered from 1");
    p.users.push_back(user - 1);
    if (bulk) {
      if (p.bulk_user) throw ConfigError("period: at most one bulk user");
      p.bulk_user = user - 1;
    }
  }
  return p;
}

const std::set<std::string> kWorkloadKinds = {"synthetic-gamma", "example1", "trace-csv",
                                              "adversary", "fuzz"};

std::set<std::string> allowed_policy_keys(const std::string& type) {
  if (type == "alg1" || type == "alg2") return {"type", "epsilon", "eta", "lambda", "empty_tolerance"};
  if (type == "restpg") return {"type", "epsilon", "capacity"};
  if (type == "greedy") return {"type", "capacity"};
  return {"type"};
}

void read_experiment(const Section& s, ExperimentConfig& c, Diagnostics& diag) {
  for (const auto& e : s.entries) {
    convert(e, diag, [&] {
      if (e.key == "output_dir") {
        c.output_dir = e.value;
      } else if (e.key == "epsilon") {
        c.epsilon = text::parse_real(e.value, "experiment.epsilon");
      } else if (e.key == "assert_invariants") {
        c.assert_invariants = parse_bool(e.value, "experiment.assert_invariants");
      } else if (e.key == "empty_tolerance") {
        c.empty_tolerance = text::parse_real(e.value, "experiment.empty_tolerance");
      } else if (e.key == "record_stride") {
        c.record_stride = text::parse_count(e.value, "experiment.record_stride");
      } else if (e.key == "parallel") {
        c.parallel = parse_bool(e.value, "experiment.parallel");
      } else {
        throw ConfigError("experiment: unknown key '" + e.key + "'");
      }
    });
  }
}

void read_workload(const Section& s, ExperimentConfig& c, Diagnostics& diag) {
  WorkloadSpec& w = c.workload;
  for (const auto& e : s.entries) {
    convert(e, diag, [&] {
      if (e.key == "kind") {
        w.kind = e.value;
      } else if (e.key == "T") {
        w.steps = text::parse_count(e.value, "workload.T");
      } else if (e.key == "seed") {
        w.seed = text::parse_count(e.value, "workload.seed");
      } else if (e.key == "sla") {
        if (e.value == "mean-load") {
          w.sla_from_mean_load = true;
        } else {
          w.sla = text::parse_real_list(e.value, "workload.sla");
        }
      } else if (e.key == "shape") {
        w.shape = text::parse_real(e.value, "workload.shape");
      } else if (e.key == "period") {
        w.periods.push_back(parse_period(e.value));
      } else if (e.key == "path") {
        w.path = e.value;
      } else if (e.key == "N") {
        w.users = text::parse_count(e.value, "workload.N");
      } else if (e.key == "p") {
        w.probability = text::parse_real(e.value, "workload.p");
      } else if (e.key == "mean") {
        w.mean = text::parse_real(e.value, "workload.mean");
      } else {
        throw ConfigError("workload: unknown key '" + e.key + "'");
      }
    });
  }
}

void read_policy(const Section& s, ExperimentConfig& c, Diagnostics& diag) {
  PolicySpec spec;
  spec.label = s.label;
  spec.type = s.label;
  for (const auto& e : s.entries) {
    if (e.key == "type") spec.type = e.value;
  }
  const auto allowed = allowed_policy_keys(spec.type);
  for (const auto& e : s.entries) {
    if (e.key == "type") continue;
    if (!allowed.count(e.key)) {
      diag.errors.push_back(at_line(e.line) + "policy " + spec.label + ": unknown key '" + e.key +
                            "' for type " + spec.type);
      continue;
    }
    convert(e, diag, [&] { text::parse_real(e.value, spec.label + "." + e.key); });
    spec.params[e.key] = e.value;
  }
  c.policies.push_back(std::move(spec));
}

void read_metrics(const Section& s, ExperimentConfig& c, Diagnostics& diag) {
  MetricsSpec& m = c.metrics;
  for (const auto& e : s.entries) {
    convert(e, diag, [&] {
      if (e.key == "work_difference") {
        for (const auto& pair : parse_names(e.value)) {
          const auto colon = pair.find(':');
          if (colon == std::string::npos) {
            throw ConfigError("metrics.work_difference: expected a:b, got '" + pair + "'");
          }
          m.work_difference.emplace_back(std::string(text::trim(pair.substr(0, colon))),
                                         std::string(text::trim(pair.substr(colon + 1))));
        }
      } else if (e.key == "sla_window") {
        m.sla_window = e.value;
      } else if (e.key == "tau") {
        m.tau = text::parse_count(e.value, "metrics.tau");
      } else if (e.key == "stride") {
        m.stride = text::parse_count(e.value, "metrics.stride");
      } else if (e.key == "queue_norms") {
        m.queue_norms = parse_names(e.value);
      } else {
        throw ConfigError("metrics: unknown key '" + e.key + "'");
      }
    });
  }
}

std::size_t default_users(const ExperimentConfig& c) {
  const auto& w = c.workload;
  if (!w.sla.empty()) return w.sla.size();
  if (w.kind == "example1" || w.kind == "synthetic-gamma") return 3;
  if (w.kind == "adversary") return 2;
  if (w.kind == "fuzz") return w.users;
  return 0;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

const PolicySpec* ExperimentConfig::find_policy(const std::string& label) const {
  for (const auto& p : policies) {
    if (p.label == label) return &p;
  }
  return nullptr;
}

ExperimentConfig parse_config(const std::string& text, Diagnostics& diag,
                              const std::filesystem::path& source) {
  ExperimentConfig c;
  c.source = source;
  std::map<std::string, std::size_t> seen;
  for (const auto& s : split_sections(text, diag)) {
    const std::string id = s.name == "policy" ? "policy " + s.label : s.name;
    if (auto [it, fresh] = seen.emplace(id, s.line); !fresh) {
      diag.errors.push_back(at_line(s.line) + "duplicate section [" + id + "] (first at line " +
                            std::to_string(it->second) + ")");
      continue;
    }
    std::map<std::string, std::size_t> keys;
    for (const auto& e : s.entries) {
      if (e.key == "period") continue;
      if (auto [it, fresh] = keys.emplace(e.key, e.line); !fresh) {
        diag.errors.push_back(at_line(e.line) + "duplicate key '" + e.key + "'");
      }
    }
    if (s.name == "experiment") read_experiment(s, c, diag);
    if (s.name == "workload") read_workload(s, c, diag);
    if (s.name == "policy" && !s.label.empty()) read_policy(s, c, diag);
    if (s.name == "metrics") read_metrics(s, c, diag);
  }
  if (!seen.count("workload")) diag.errors.push_back("missing [workload] section");
  return c;
}

void validate_config(const ExperimentConfig& c, Diagnostics& diag) {
  auto error = [&](std::string m) { diag.errors.push_back(std::move(m)); };
  const WorkloadSpec& w = c.workload;

  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) error("experiment.epsilon must lie in (0, 1)");
  if (!(c.empty_tolerance >= 0.0)) error("experiment.empty_tolerance must be non-negative");
  if (c.record_stride == 0) error("experiment.record_stride must be at least 1");

  // Workload shape.
  std::size_t n = default_users(c);
  std::size_t steps = w.steps;
  if (!kWorkloadKinds.count(w.kind)) {
    error("workload.kind: unknown kind '" + w.kind +
          "' (synthetic-gamma, example1, trace-csv, adversary, fuzz)");
  }
  if (w.kind == "trace-csv") {
    if (w.path.empty()) {
      error("workload.path is required for trace-csv");
    } else {
      try {
        const LoadMatrix loads = build_loads(c);
        if (!w.sla.empty() && w.sla.size() != loads.users()) {
          error("workload.sla has " + std::to_string(w.sla.size()) + " entries but the trace has " +
                std::to_string(loads.users()) + " users");
        }
        n = loads.users();
        if (steps != 0 && steps != loads.steps()) {
          error("workload.T=" + std::to_string(steps) + " but the trace has " +
                std::to_string(loads.steps()) + " steps");
        }
        steps = loads.steps();
      } catch (const ParseError& e) {
        error("workload.path: " + w.path.string() + ": " + e.what());
      } catch (const IoError& e) {
        error(std::string("workload.path: ") + e.what());
      }
    }
  } else if (kWorkloadKinds.count(w.kind) && steps == 0) {
    error("workload.T must be a positive integer");
  }
  if (w.sla_from_mean_load && w.kind != "trace-csv") {
    error("workload.sla = mean-load is only available for trace-csv");
  }

  if (w.kind == "synthetic-gamma") {
    const std::size_t periods = w.periods.empty() ? 6 : w.periods.size();
    if (steps != 0 && steps % periods != 0) {
      error("workload.T=" + std::to_string(steps) + " is not divisible by " +
            std::to_string(periods) + " (number of periods)");
    }
    if (w.periods.empty() && n != 3) error("synthetic-gamma default schedule needs N=3");
    if (!(w.shape > 0.0)) error("workload.shape must be positive");
    for (const auto& p : w.periods) {
      for (std::size_t u : p.users) {
        if (u >= n) error("workload.period references user " + std::to_string(u + 1) + " > N");
      }
    }
  }
  if (w.kind == "example1") {
    if (steps != 0 && steps % 3 != 0) {
      error("workload.T=" + std::to_string(steps) + " is not divisible by 3");
    }
    if (n != 3) error("example1 needs N=3");
  }
  if (w.kind == "adversary") {
    if (n != 2) error("the adversary workload supports N=2 only");
    const auto online = std::count_if(c.policies.begin(), c.policies.end(),
                                      [](const PolicySpec& p) { return is_online_policy(p.type); });
    if (online != 1) {
      error("the adversary workload drives exactly one online policy, found " +
            std::to_string(online));
    }
  }
  if (w.kind == "fuzz") {
    if (w.users == 0) error("workload.N must be positive for fuzz");
    if (!w.sla.empty() && w.sla.size() != w.users) error("workload.sla length differs from N");
    if (!(w.probability >= 0.0 && w.probability <= 1.0)) error("workload.p must lie in [0, 1]");
    if (w.mean && !(*w.mean > 0.0)) error("workload.mean must be positive");
  }

  std::optional<SlaVector> sla;
  if (!w.sla.empty()) {
    try {
      sla.emplace(w.sla);
    } catch (const std::exception& e) {
      error(std::string("workload.sla: ") + e.what());
    }
  } else if (n > 0 && !w.sla_from_mean_load) {
    try {
      sla = resolve_sla(c);
    } catch (const std::exception&) {
    }
  }

  // Policies.
  if (c.policies.empty()) error("no [policy ...] sections");
  for (const auto& p : c.policies) {
    if (p.label.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
        std::string::npos) {
      error("policy " + p.label + ": labels may only use letters, digits, '_', '.' and '-'");
    }
    if (!is_online_policy(p.type) && !is_offline_policy(p.type)) {
      error("policy " + p.label + ": unknown type '" + p.type +
            "' (alg1, alg2, static, po, owm, pg, restpg, greedy)");
      continue;
    }
    if (p.type == "alg1" || p.type == "alg2") {
      if (n < 2) {
        if (n == 1) error("policy " + p.label + ": needs N >= 2");
        continue;
      }
      PolicyParams params;
      try {
        params = mw_params_from(p, n);
        params.validate();
      } catch (const std::exception& e) {
        error("policy " + p.label + ": " + e.what());
        continue;
      }
      if (sla) {
        const double floor = 2.0 * params.epsilon / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          if ((*sla)[i] < floor) {
            diag.warnings.push_back("policy " + p.label +
                                    ": SLA-satisfaction precondition beta(i) >= 2*eps/N violated "
                                    "for user " +
                                    std::to_string(i + 1) + " (beta=" + fmt((*sla)[i]) +
                                    ", 2*eps/N=" + fmt(floor) + ")");
          }
        }
      }
    }
    try {
      if (p.params.count("capacity")) {
        const double cap = text::parse_real(p.params.at("capacity"), p.label + ".capacity");
        if (!(cap > 0.0 && cap <= 1.0)) error("policy " + p.label + ": capacity must lie in (0, 1]");
      }
      if (p.type == "restpg" && p.params.count("epsilon")) {
        const double eps = text::parse_real(p.params.at("epsilon"), p.label + ".epsilon");
        if (!(eps > 0.0 && eps < 1.0)) error("policy " + p.label + ": epsilon must lie in (0, 1)");
        if (p.params.count("capacity")) error("policy " + p.label + ": give epsilon or capacity, not both");
      }
    } catch (const ConfigError&) {
      // already reported by the parser
    }
  }

  // Metrics.
  auto known = [&](const std::string& label, const std::string& where) {
    if (!c.find_policy(label)) error(where + ": no policy labelled '" + label + "'");
  };
  for (const auto& [a, b] : c.metrics.work_difference) {
    known(a, "metrics.work_difference");
    known(b, "metrics.work_difference");
  }
  for (const auto& q : c.metrics.queue_norms) known(q, "metrics.queue_norms");
  if (c.metrics.sla_window) {
    known(*c.metrics.sla_window, "metrics.sla_window");
    if (c.metrics.tau == 0) error("metrics.tau must be positive");
    if (steps != 0 && c.metrics.tau > steps) {
      error("metrics.tau=" + std::to_string(c.metrics.tau) + " exceeds T=" + std::to_string(steps));
    }
    if (c.metrics.stride && *c.metrics.stride == 0) error("metrics.stride must be positive");
    if (c.record_stride > 1) error("metrics.sla_window needs experiment.record_stride = 1");
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, Diagnostics* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Diagnostics local;
  Diagnostics& diag = out ? *out : local;
  ExperimentConfig c = parse_config(buf.str(), diag, path);
  if (diag.ok()) validate_config(c, diag);
  if (!diag.ok()) {
    std::string msg = path.string() + ": invalid configuration";
    for (const auto& e : diag.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

SlaVector resolve_sla(const ExperimentConfig& c, const LoadMatrix* loads) {
  const WorkloadSpec& w = c.workload;
  try {
    if (!w.sla.empty()) return SlaVector(w.sla);
    if (w.sla_from_mean_load) {
      if (!loads) throw ConfigError("sla = mean-load needs the trace");
      std::vector<double> share(loads->users(), 0.0);
      for (std::size_t k = 0; k < loads->steps(); ++k) {
        auto row = loads->row(k);
        for (std::size_t i = 0; i < share.size(); ++i) share[i] += row[i];
      }
      const double total = loads->total();
      if (!(total > 0.0)) throw ConfigError("sla = mean-load needs a trace with positive load");
      for (double& s : share) s /= total;
      const double sum = std::accumulate(share.begin(), share.end(), 0.0);
      if (sum > 1.0) {
        for (double& s : share) s /= sum * (1.0 + 1e-15);
      }
      return SlaVector(share);
    }
    if (w.kind == "synthetic-gamma") return SlaVector({0.2, 0.3, 0.5});
    if (w.kind == "example1") return SlaVector({0.5, 0.2, 0.3});
    std::size_t n = default_users(c);
    if (n == 0 && loads) n = loads->users();
    if (n == 0) throw ConfigError("cannot infer N for the default SLA");
    return SlaVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("workload.sla: ") + e.what());
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("workload.sla: ") + e.what());
  }
}

LoadMatrix build_loads(const ExperimentConfig& c) {
  const WorkloadSpec& w = c.workload;
  if (w.kind == "synthetic-gamma") {
    SyntheticGammaConfig g;
    g.steps = w.steps;
    g.seed = w.seed;
    g.shape = w.shape;
    g.periods = w.periods;
    return synthetic_gamma(resolve_sla(c), g);
  }
  if (w.kind == "example1") return example1_instance(w.steps);
  if (w.kind == "trace-csv") {
    std::filesystem::path p = w.path;
    if (p.is_relative() && !c.source.empty()) p = c.source.parent_path() / p;
    return read_trace_csv(p);
  }
  if (w.kind == "fuzz") {
    FuzzLoadConfig f;
    f.users = w.users;
    f.steps = w.steps;
    f.seed = w.seed;
    f.probability = w.probability;
    f.mean = w.mean.value_or(2.0 / static_cast<double>(std::max<std::size_t>(w.users, 1)));
    return fuzz_loads(f);
  }
  throw ConfigError("workload kind '" + w.kind + "' has no precomputed load matrix");
}

}  // namespace mwsla
