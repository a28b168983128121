#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mwsla/core.hpp"

namespace mwsla {

enum class MwVariant {
  kBasic,         // boost users below beta(i)
  kProportional,  // boost users below (1 - eps) beta(i) / sum_{active} beta
};

struct GrowthViolation {
  std::size_t step;  // 1-based decision index
  std::size_t user;  // 0-based
  std::string check;  // tag of the failed bound
  double observed;
  double bound;
};

// Runtime monitor for the per-step growth guarantees of the MW updates.
// Each check is skipped unless its preconditions hold for the configured
// parameters (canonical lambda, eps <= 1/10, eta <= 1/3, beta(i) >= 2 eps / N).
struct GrowthMonitor {
  double slack = 1e-10;
  std::size_t checks = 0;
  std::size_t violation_count = 0;
  std::vector<GrowthViolation> violations;  // first few only
  static constexpr std::size_t kKeep = 32;

  void record(GrowthViolation v);
};

// Multiplicative weight update over the truncated simplex, in both the basic
// and the SLA-proportional flavour. h starts uniform.
class MwPolicy final : public Policy {
 public:
  MwPolicy(SlaVector sla, PolicyParams params, MwVariant variant);

  std::string name() const override;
  std::size_t users() const override { return sla_.users(); }
  Allocation decide(const ActiveSet& active) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<MwPolicy>(*this); }

  // One update from the current state; also what decide() uses.
  Allocation update(const ActiveSet& active);

  // Users boosted by 1 + lambda under `active` from the current state.
  ActiveSet below_threshold(const ActiveSet& active) const;

  const Allocation& allocation() const { return h_; }
  void set_allocation(Allocation h);  // must lie in the truncated simplex
  const PolicyParams& params() const { return params_; }
  const SlaVector& sla() const { return sla_; }
  MwVariant variant() const { return variant_; }

  void enable_monitor(bool on) { monitor_on_ = on; }
  const GrowthMonitor& monitor() const { return monitor_; }

 private:
  void check_growth(const Allocation& before, const ActiveSet& active, const ActiveSet& boosted,
                    const Allocation& after);

  SlaVector sla_;
  PolicyParams params_;
  MwVariant variant_;
  Allocation h_;
  std::size_t decisions_ = 0;
  bool monitor_on_ = false;
  GrowthMonitor monitor_;
};

// h = beta every step; 1 - sum beta stays idle.
class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(SlaVector sla) : sla_(std::move(sla)) {}

  std::string name() const override { return "static"; }
  std::size_t users() const override { return sla_.users(); }
  Allocation decide(const ActiveSet&) override;
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<StaticPolicy>(*this);
  }

 private:
  SlaVector sla_;
};

// SLA shares renormalised over the active set; beta itself when nobody is
// active. Throws DegenerateSlaError when every active user has beta = 0.
Allocation proportional_online(const ActiveSet& active, const SlaVector& sla);

class ProportionalOnlinePolicy final : public Policy {
 public:
  explicit ProportionalOnlinePolicy(SlaVector sla) : sla_(std::move(sla)) {}

  std::string name() const override { return "po"; }
  std::size_t users() const override { return sla_.users(); }
  Allocation decide(const ActiveSet& active) override { return proportional_online(active, sla_); }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<ProportionalOnlinePolicy>(*this);
  }

 private:
  SlaVector sla_;
};

// Online work-maximising greedy. Users rotate A (served) -> I (idle) ->
// B (waiting) -> A: members of A that go idle drop to I, idle users that
// become active queue up in B, and B is promoted wholesale once A drains.
// The resource is split evenly over A.
class OwmPolicy final : public Policy {
 public:
  enum class Bucket : unsigned char { kServed, kWaiting, kIdle };

  // Starts with every user in A.
  explicit OwmPolicy(std::size_t users);

  std::string name() const override { return "owm"; }
  std::size_t users() const override { return buckets_.size(); }
  Allocation decide(const ActiveSet& active) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<OwmPolicy>(*this); }

  Bucket bucket(std::size_t i) const { return buckets_[i]; }
  void set_buckets(std::vector<Bucket> buckets);

 private:
  std::vector<Bucket> buckets_;
};

// Policy selection as data: a type name plus string parameters.
struct PolicySpec {
  std::string label;  // output name; defaults to type
  std::string type;   // alg1 | alg2 | static | po | owm | pg | restpg | greedy
  std::map<std::string, std::string> params;
};

bool is_online_policy(const std::string& type);
bool is_offline_policy(const std::string& type);

// Builds an online policy. Recognised parameters for alg1/alg2: epsilon, eta,
// lambda (override, non-canonical), empty_tolerance. Throws ConfigError.
std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const SlaVector& sla,
                                    bool monitor_growth = false);

PolicyParams mw_params_from(const PolicySpec& spec, std::size_t users);

}  // namespace mwsla
