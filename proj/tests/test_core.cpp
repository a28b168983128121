#include <cmath>
#include <random>

#include "doctest.h"
#include "mwsla/core.hpp"
#include "mwsla/errors.hpp"
#include "mwsla/policies.hpp"
#include "mwsla/workloads.hpp"

using namespace mwsla;

namespace {

// Replays a fixed allocation sequence; records the feedback it was shown.
class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(std::size_t n, std::vector<Allocation> script) : n_(n), script_(std::move(script)) {}
  std::string name() const override { return "scripted"; }
  std::size_t users() const override { return n_; }
  Allocation decide(const ActiveSet& a) override {
    seen.push_back(a);
    return script_[std::min(seen.size() - 1, script_.size() - 1)];
  }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ScriptedPolicy>(*this); }
  std::vector<ActiveSet> seen;

 private:
  std::size_t n_;
  std::vector<Allocation> script_;
};

}  // namespace

TEST_CASE("step applies the fluid queue update") {
  auto a = step(std::vector<double>{0.0}, std::vector<double>{0.5}, std::vector<double>{1.0});
  CHECK(a.work[0] == 0.5);
  CHECK(a.queue[0] == 0.5);

  auto b = step(std::vector<double>{0.2}, std::vector<double>{1.0}, std::vector<double>{0.3});
  CHECK(b.work[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b.queue[0] == 0.0);

  auto c = step(std::vector<double>{0, 0}, std::vector<double>{0.5, 0.5}, std::vector<double>{0, 0});
  CHECK(c.work == std::vector<double>{0, 0});
  CHECK(c.queue == std::vector<double>{0, 0});

  CHECK_THROWS_AS(step(std::vector<double>{0.0}, std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}),
                  StructuralError);
}

TEST_CASE("feedback thresholds at the tolerance") {
  CHECK(feedback(std::vector<double>{0, 1e-15, 0.3}, 1e-12).members() == std::vector<std::size_t>{2});
  CHECK(feedback(std::vector<double>{0, 0}, 0.5).empty());
  CHECK(feedback(std::vector<double>{0.1, 0.1}, 0.0).size() == 2);
  CHECK(feedback(std::vector<double>{1e-12}, 1e-12).empty());
}

TEST_CASE("SlaVector validation") {
  CHECK_THROWS_AS(SlaVector(std::vector<double>{}), StructuralError);
  CHECK_THROWS_AS(SlaVector({-0.1, 0.5}), DomainError);
  CHECK_THROWS_WITH_AS(SlaVector({0.6, 0.6}), "SLA sum exceeds 1", DomainError);
  CHECK_NOTHROW(SlaVector({0.5, 0.5 + 1e-13}));
  SlaVector s({0.2, 0.3, 0.5});
  CHECK(s.theory_applicable(0.1));  // 2 eps / N = 0.0667
  CHECK_FALSE(SlaVector({0.05, 0.95}).theory_applicable(0.1));
}

TEST_CASE("PolicyParams derive lambda and validate ranges") {
  auto p = PolicyParams::canonical(0.1, 1.0 / 3.0, 4);
  CHECK(p.lambda == 0.1 * 0.1 / 32.0);
  CHECK(p.lambda_canonical);
  CHECK_NOTHROW(p.validate());
  auto q = p.with_lambda(0.5);
  CHECK_FALSE(q.lambda_canonical);
  CHECK_THROWS_AS(PolicyParams::canonical(0.2, 0.3, 2).validate(), DomainError);
  CHECK_THROWS_AS(PolicyParams::canonical(0.05, 0.5, 2).validate(), DomainError);
  CHECK_THROWS_AS(PolicyParams::canonical(0.0, 0.3, 2).validate(), DomainError);
}

TEST_CASE("simulate: capacity-matched single user") {
  SlaVector sla({1.0});
  StaticPolicy policy(sla);
  LoadMatrix loads(5, 1);
  for (std::size_t k = 0; k < 5; ++k) loads.at(k, 0) = 1.0;
  MatrixLoadSource src(loads);
  auto trace = simulate(policy, src, sla, 5);
  CHECK(trace.total_work() == 5.0);
  CHECK(trace.final_queue()[0] == 0.0);
  CHECK(trace.records() == 5);
  CHECK(trace.record(4).t == 5);
}

TEST_CASE("simulate: zero loads do no work under any policy") {
  SlaVector sla({0.2, 0.3, 0.5});
  for (const char* type : {"alg1", "alg2", "static", "po", "owm"}) {
    auto policy = make_policy({type, type, {}}, sla);
    MatrixLoadSource src(LoadMatrix(10, 3));
    auto trace = simulate(*policy, src, sla, 10);
    CHECK(trace.total_work() == 0.0);
    for (double q : trace.final_queue()) CHECK(q == 0.0);
  }
}

TEST_CASE("simulate: the static allocation does 5 of 6 units on the alternating instance") {
  SlaVector sla({0.5, 0.2, 0.3});
  StaticPolicy policy(sla);
  MatrixLoadSource src(example1_instance(6));
  CHECK(simulate(policy, src, sla, 6).total_work() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("simulate: feedback is taken before the load arrives") {
  ScriptedPolicy policy(2, {{0.5, 0.5}});
  LoadMatrix loads(2, 2);
  loads.at(0, 0) = 0.3;  // served within the step, never queued
  loads.at(1, 1) = 0.9;
  MatrixLoadSource src(loads);
  auto trace = simulate(policy, src, SlaVector({0.5, 0.5}), 2);
  CHECK(policy.seen[0].empty());
  CHECK(policy.seen[1].empty());
  CHECK(trace.record(0).work[0] == 0.3);
  CHECK(trace.final_queue()[1] == doctest::Approx(0.4));
}

TEST_CASE("simulate: errors") {
  SlaVector sla({0.5, 0.5});
  SUBCASE("exhausted source names the step") {
    StaticPolicy p(sla);
    MatrixLoadSource src(LoadMatrix(3, 2));
    CHECK_THROWS_WITH_AS(simulate(p, src, sla, 5), doctest::Contains("t=4"), SimulationError);
  }
  SUBCASE("over-allocation") {
    ScriptedPolicy p(2, {{0.7, 0.7}});
    MatrixLoadSource src(LoadMatrix(3, 2));
    CHECK_THROWS_AS(simulate(p, src, sla, 3), InvariantViolation);
  }
  SUBCASE("shape mismatch") {
    StaticPolicy p(sla);
    MatrixLoadSource src(LoadMatrix(3, 3));
    CHECK_THROWS_AS(simulate(p, src, sla, 3), StructuralError);
  }
}

TEST_CASE("property: conservation and per-step bounds on random runs") {
  std::mt19937_64 rng(11);
  for (int run = 0; run < 20; ++run) {
    const std::size_t n = 2 + run % 5;
    FuzzLoadConfig cfg;
    cfg.users = n;
    cfg.steps = 400;
    cfg.seed = 100 + run;
    cfg.mean = 2.0 / static_cast<double>(n);
    const LoadMatrix loads = fuzz_loads(cfg);
    SlaVector sla(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    for (const char* type : {"alg1", "alg2", "static", "po", "owm"}) {
      auto policy = make_policy({type, type, {}}, sla);
      MatrixLoadSource src(loads);
      auto trace = simulate(*policy, src, sla, cfg.steps);
      double queued = 0.0;
      for (double q : trace.final_queue()) queued += q;
      CHECK(std::abs(trace.total_work() + queued - loads.total()) <= 1e-9 * loads.total());
      for (std::size_t k = 0; k < trace.records(); ++k) {
        const auto v = trace.record(k);
        const auto before = trace.queue_before(k);
        double hs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          hs += v.allocation[i];
          CHECK(v.work[i] >= 0.0);
          CHECK(v.work[i] <= v.allocation[i]);
          CHECK(std::abs(v.work[i] - std::min(v.allocation[i], v.load[i] + before[i])) <= 1e-12);
          CHECK((v.active[i] != 0) == (before[i] > kDefaultEmptyTolerance));
        }
        CHECK(hs <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("property: policies see only feedback") {
  // Two different load sequences with the same emptiness pattern.
  LoadMatrix a(4, 2), b(4, 2);
  a.at(0, 0) = 2.0;
  a.at(0, 1) = 2.0;
  b.at(0, 0) = 5.0;
  b.at(0, 1) = 3.0;
  SlaVector sla({0.4, 0.6});
  for (const char* type : {"alg1", "alg2", "po", "owm"}) {
    auto pa = make_policy({type, type, {}}, sla);
    auto pb = make_policy({type, type, {}}, sla);
    MatrixLoadSource sa(a), sb(b);
    auto ta = simulate(*pa, sa, sla, 4);
    auto tb = simulate(*pb, sb, sla, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto va = ta.record(k), vb = tb.record(k);
      REQUIRE(std::equal(va.active.begin(), va.active.end(), vb.active.begin()));
      CHECK(std::equal(va.allocation.begin(), va.allocation.end(), vb.allocation.begin()));
    }
  }
}

TEST_CASE("trace stride keeps totals exact") {
  SlaVector sla({0.5, 0.5});
  FuzzLoadConfig cfg;
  cfg.users = 2;
  cfg.steps = 1000;
  const LoadMatrix loads = fuzz_loads(cfg);
  StaticPolicy p1(sla), p2(sla);
  MatrixLoadSource s1(loads), s2(loads);
  auto full = simulate(p1, s1, sla, 1000);
  RunOptions opt;
  opt.stride = 7;
  auto thin = simulate(p2, s2, sla, 1000, opt);
  CHECK(thin.records() == 143);
  CHECK(thin.record(1).t == 8);
  CHECK(thin.total_work() == full.total_work());
  CHECK(thin.final_queue()[0] == full.final_queue()[0]);
  CHECK(thin.record(1).cumulative_work == full.record(7).cumulative_work);
  CHECK_THROWS_AS(thin.queue_before(1), StructuralError);
}
