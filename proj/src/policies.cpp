#include "mwsla/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mwsla/errors.hpp"
#include "mwsla/projection.hpp"
#include "text.hpp"

namespace mwsla {

void GrowthMonitor::record(GrowthViolation v) {
  ++violation_count;
  if (violations.size() < kKeep) violations.push_back(std::move(v));
}

MwPolicy::MwPolicy(SlaVector sla, PolicyParams params, MwVariant variant)
    : sla_(std::move(sla)), params_(params), variant_(variant) {
  params_.validate();
  const std::size_t n = sla_.users();
  if (n < 2) throw StructuralError("multiplicative weight policies need N >= 2");
  h_.assign(n, 1.0 / static_cast<double>(n));
}

std::string MwPolicy::name() const { return variant_ == MwVariant::kBasic ? "alg1" : "alg2"; }

void MwPolicy::set_allocation(Allocation h) {
  const std::size_t n = sla_.users();
  if (h.size() != n) throw StructuralError("allocation has wrong length");
  const double floor = params_.epsilon / static_cast<double>(n);
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9 ||
      std::any_of(h.begin(), h.end(), [&](double v) { return v < floor - 1e-12; })) {
    throw DomainError("allocation is not in the truncated simplex");
  }
  h_ = std::move(h);
}

ActiveSet MwPolicy::below_threshold(const ActiveSet& active) const {
  const std::size_t n = sla_.users();
  ActiveSet boosted(n);
  double active_mass = 0.0;
  if (variant_ == MwVariant::kProportional) {
    for (std::size_t i = 0; i < n; ++i) {
      if (active.contains(i)) active_mass += sla_[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!active.contains(i)) continue;
    double threshold = sla_[i];
    if (variant_ == MwVariant::kProportional) {
      threshold = active_mass > 0.0 ? (1.0 - params_.epsilon) * sla_[i] / active_mass : 0.0;
    }
    if (h_[i] < threshold) boosted.insert(i);
  }
  return boosted;
}

Allocation MwPolicy::update(const ActiveSet& active) {
  const std::size_t n = sla_.users();
  if (active.users() != n) throw StructuralError("active set has wrong user count");
  const ActiveSet boosted = below_threshold(active);

  std::vector<double> grown(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gain = 0.0;
    if (boosted.contains(i)) {
      gain = 1.0 + params_.lambda;
    } else if (active.contains(i)) {
      gain = 1.0;
    }
    grown[i] = h_[i] * std::exp(params_.eta * gain);
  }
  Allocation next = project_truncated_simplex(grown, params_.epsilon).x;

  if (monitor_on_) check_growth(h_, active, boosted, next);
  h_ = next;
  return next;
}

Allocation MwPolicy::decide(const ActiveSet& active) {
  ++decisions_;
  return update(active);
}

void MwPolicy::check_growth(const Allocation& before, const ActiveSet& active,
                            const ActiveSet& boosted, const Allocation& after) {
  const std::size_t n = sla_.users();
  const double nn = static_cast<double>(n);
  const double eps = params_.epsilon;
  const double eta = params_.eta;
  const double slack = monitor_.slack;
  const std::size_t t = decisions_;

  const double sum = std::accumulate(after.begin(), after.end(), 0.0);
  ++monitor_.checks;
  if (std::abs(sum - 1.0) > 1e-9) monitor_.record({t, 0, "simplex-sum", sum, 1.0});
  for (std::size_t i = 0; i < n; ++i) {
    if (after[i] < eps / nn - 1e-12) monitor_.record({t, i, "simplex-floor", after[i], eps / nn});
  }

  const bool growth_ok = params_.lambda_canonical && eps <= 0.1 && eta <= 1.0;
  if (!growth_ok) return;
  const bool sla_ok = eta <= 1.0 / 3.0 + 1e-15 && sla_.theory_applicable(eps);

  const double c = eps * eta / (4.0 * nn);
  const double c_prime = eps * eta * params_.lambda / (2.0 * nn);
  double active_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (active.contains(i)) active_mass += before[i];
  }
  const bool underused = active_mass <= 1.0 - eps;

  auto expect = [&](std::size_t i, const char* check, double bound) {
    ++monitor_.checks;
    if (after[i] < bound - slack) monitor_.record({t, i, check, after[i], bound});
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (!active.contains(i)) continue;
    if (underused) expect(i, "underused-growth", (1.0 + c) * before[i]);
    if (boosted.contains(i)) {
      expect(i, "boost-monotone", before[i]);
      if (sla_ok && variant_ == MwVariant::kBasic) expect(i, "boost-growth", (1.0 + c_prime) * before[i]);
      if (sla_ok && variant_ == MwVariant::kProportional && !underused) {
        expect(i, "proportional-boost-growth", (1.0 + c_prime) * before[i]);
      }
    } else {
      expect(i, "boost-monotone", (1.0 - eps * c) * before[i]);
    }
  }
}

Allocation StaticPolicy::decide(const ActiveSet&) {
  return Allocation(sla_.values().begin(), sla_.values().end());
}

Allocation proportional_online(const ActiveSet& active, const SlaVector& sla) {
  const std::size_t n = sla.users();
  if (active.users() != n) throw StructuralError("active set has wrong user count");
  if (active.empty()) return Allocation(sla.values().begin(), sla.values().end());
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (active.contains(i)) mass += sla[i];
  }
  if (!(mass > 0.0)) {
    throw DegenerateSlaError("every active user has a zero SLA; proportional share undefined");
  }
  Allocation h(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (active.contains(i)) h[i] = sla[i] / mass;
  }
  return h;
}

OwmPolicy::OwmPolicy(std::size_t users) : buckets_(users, Bucket::kServed) {
  if (users == 0) throw StructuralError("OWM needs at least one user");
}

void OwmPolicy::set_buckets(std::vector<Bucket> buckets) {
  if (buckets.size() != buckets_.size()) throw StructuralError("bucket vector has wrong length");
  buckets_ = std::move(buckets);
}

Allocation OwmPolicy::decide(const ActiveSet& active) {
  const std::size_t n = buckets_.size();
  if (active.users() != n) throw StructuralError("active set has wrong user count");
  bool any_served = false;
  for (std::size_t i = 0; i < n; ++i) {
    Bucket& b = buckets_[i];
    if (b == Bucket::kServed && !active.contains(i)) {
      b = Bucket::kIdle;
    } else if (b == Bucket::kIdle && active.contains(i)) {
      b = Bucket::kWaiting;
    }
    any_served = any_served || b == Bucket::kServed;
  }
  if (!any_served) {
    for (auto& b : buckets_) {
      if (b == Bucket::kWaiting) b = Bucket::kServed;
    }
  }
  const auto served = static_cast<std::size_t>(
      std::count(buckets_.begin(), buckets_.end(), Bucket::kServed));
  Allocation h(n, 0.0);
  if (served == 0) return h;
  const double share = 1.0 / static_cast<double>(served);
  for (std::size_t i = 0; i < n; ++i) {
    if (buckets_[i] == Bucket::kServed) h[i] = share;
  }
  return h;
}

bool is_online_policy(const std::string& type) {
  return type == "alg1" || type == "alg2" || type == "static" || type == "po" || type == "owm";
}

bool is_offline_policy(const std::string& type) {
  return type == "pg" || type == "restpg" || type == "greedy";
}

PolicyParams mw_params_from(const PolicySpec& spec, std::size_t users) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : text::parse_real(it->second, spec.label + "." + key);
  };
  PolicyParams p = PolicyParams::canonical(get("epsilon", 0.02), get("eta", 1.0 / 3.0), users,
                                           get("empty_tolerance", kDefaultEmptyTolerance));
  if (spec.params.count("lambda")) p = p.with_lambda(get("lambda", p.lambda));
  return p;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const SlaVector& sla,
                                    bool monitor_growth) {
  const std::string& type = spec.type;
  try {
    if (type == "alg1" || type == "alg2") {
      auto policy = std::make_unique<MwPolicy>(
          sla, mw_params_from(spec, sla.users()),
          type == "alg1" ? MwVariant::kBasic : MwVariant::kProportional);
      policy->enable_monitor(monitor_growth);
      return policy;
    }
    if (type == "static") return std::make_unique<StaticPolicy>(sla);
    if (type == "po") return std::make_unique<ProportionalOnlinePolicy>(sla);
    if (type == "owm") return std::make_unique<OwmPolicy>(sla.users());
  } catch (const DomainError& e) {
    throw ConfigError(spec.label + ": " + e.what());
  } catch (const StructuralError& e) {
    throw ConfigError(spec.label + ": " + e.what());
  }
  throw ConfigError("unknown online policy type '" + type + "'");
}

}  // namespace mwsla
