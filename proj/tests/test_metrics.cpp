#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mwsla/errors.hpp"
#include "mwsla/metrics.hpp"
#include "mwsla/offline.hpp"
#include "mwsla/policies.hpp"
#include "mwsla/workloads.hpp"
#include "oracles.hpp"

using namespace mwsla;

namespace {

SimulationTrace run(Policy& p, const LoadMatrix& loads, const SlaVector& sla, std::size_t stride = 1) {
  MatrixLoadSource src(loads);
  RunOptions opt;
  opt.stride = stride;
  return simulate(p, src, sla, loads.steps(), opt);
}

std::vector<std::vector<double>> nested(const LoadMatrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < m.steps(); ++k) out.emplace_back(m.row(k).begin(), m.row(k).end());
  return out;
}

}  // namespace

TEST_CASE("cumulative work: trivial traces") {
  SlaVector one({1.0});
  StaticPolicy s(one);
  LoadMatrix full(5, 1);
  for (std::size_t k = 0; k < 5; ++k) full.at(k, 0) = 1.0;
  const auto c = cumulative_work(run(s, full, one));
  CHECK(c.values == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(c.steps == std::vector<std::size_t>{1, 2, 3, 4, 5});

  const auto z = cumulative_work(run(s, LoadMatrix(4, 1), one));
  for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("work difference is antisymmetric and zero against itself") {
  SlaVector sla({0.2, 0.3, 0.5});
  const auto loads = fuzz_loads({3, 2000, 4, 0.5, 0.7});
  MwPolicy mw(sla, PolicyParams::canonical(0.05, 1.0 / 3.0, 3), MwVariant::kProportional);
  StaticPolicy st(sla);
  const auto a = run(mw, loads, sla);
  const auto b = run(st, loads, sla);
  const auto ab = work_difference(a, b), ba = work_difference(b, a), aa = work_difference(a, a);
  for (std::size_t k = 0; k < ab.size(); ++k) {
    CHECK(ab.values[k] == -ba.values[k]);
    CHECK(aa.values[k] == 0.0);
  }
  CHECK(ab.back() == doctest::Approx(a.total_work() - b.total_work()).epsilon(1e-12));

  const auto thin = run(st, loads, sla, 10);
  CHECK_THROWS_AS(work_difference(a, thin), StructuralError);
  const auto short_loads = fuzz_loads({3, 100, 4, 0.5, 0.7});
  StaticPolicy st2(sla);
  CHECK_THROWS_AS(work_difference(a, run(st2, short_loads, sla)), StructuralError);
}

TEST_CASE("conservation through the metrics") {
  SlaVector sla({0.1, 0.2, 0.3, 0.4});
  const auto loads = fuzz_loads({4, 3000, 9, 0.6, 0.5});
  OwmPolicy owm(4);
  const auto t = run(owm, loads, sla);
  const double q = std::accumulate(t.final_queue().begin(), t.final_queue().end(), 0.0);
  CHECK(cumulative_work(t).back() + q == doctest::Approx(loads.total()).epsilon(1e-9));
  const auto norm = queue_two_norm(t);
  const auto fq = t.final_queue();
  CHECK(norm.back() == doctest::Approx(std::sqrt(std::inner_product(fq.begin(), fq.end(), fq.begin(), 0.0))));
}

TEST_CASE("queue norm of a simple instance") {
  SlaVector sla({0.5, 0.5});
  StaticPolicy s(sla);
  LoadMatrix loads(3, 2);
  loads.at(0, 0) = 3.5;
  loads.at(0, 1) = 4.5;
  const auto norm = queue_two_norm(run(s, loads, sla));
  CHECK(norm.values[0] == doctest::Approx(5.0));
  CHECK(norm.values[1] == doctest::Approx(std::sqrt(2.5 * 2.5 + 3.5 * 3.5)));
  const auto sum = summarize(norm);
  CHECK(sum.max == doctest::Approx(5.0));
  CHECK(sum.time_average == doctest::Approx((norm.values[0] + norm.values[1] + norm.values[2]) / 3));
}

TEST_CASE("SLA window statistic") {
  SlaVector sla({0.2, 0.3, 0.5});
  const auto loads = fuzz_loads({3, 600, 12, 0.5, 0.7});

  SUBCASE("static against itself is zero") {
    StaticPolicy st(sla);
    const auto w = sla_window_stats(run(st, loads, sla), loads, sla, 50, 7);
    for (double r : w.series) CHECK(r == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    CHECK(w.windows == (600 - 50) / 7 + 1);
  }

  MwPolicy mw(sla, PolicyParams::canonical(0.05, 1.0 / 3.0, 3), MwVariant::kBasic);
  const auto alg = run(mw, loads, sla);

  SUBCASE("a full-horizon window compares totals") {
    StaticPolicy st(sla);
    const auto ref = run(st, loads, sla);
    const auto w = sla_window_stats(alg, loads, sla, 600, 600);
    REQUIRE(w.windows == 1);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(w.series[i] == doctest::Approx(ref.work_totals()[i] - alg.work_totals()[i]));
      CHECK(w.std[i] == 0.0);
    }
  }

  SUBCASE("matches a direct re-simulation") {
    const auto w = sla_window_stats(alg, loads, sla, 40, 13);
    const auto rows = nested(loads);
    for (std::size_t k = 0; k < w.windows; ++k) {
      const std::size_t t = w.steps[k];
      std::vector<double> q(alg.queue_before(t - 1).begin(), alg.queue_before(t - 1).end());
      const auto done = oracle::static_window(rows, q, {0.2, 0.3, 0.5}, t - 1, 40);
      for (std::size_t i = 0; i < 3; ++i) {
        double alg_work = 0.0;
        for (std::size_t r = t - 1; r < t + 39; ++r) alg_work += alg.record(r).work[i];
        CHECK(w.series[k * 3 + i] == doctest::Approx(done[i] - alg_work).epsilon(1e-9));
      }
    }
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(w.min[i] <= w.mean[i]);
      CHECK(w.mean[i] <= w.max[i]);
      CHECK(w.std[i] >= 0.0);
    }
  }

  CHECK_THROWS_AS(sla_window_stats(alg, loads, sla, 601, 1), ConfigError);
  CHECK_THROWS_AS(sla_window_stats(alg, loads, sla, 0, 1), ConfigError);
  CHECK_THROWS_AS(sla_window_stats(alg, loads, sla, 10, 0), ConfigError);
  MwPolicy mw2(sla, PolicyParams::canonical(0.05, 1.0 / 3.0, 3), MwVariant::kBasic);
  CHECK_THROWS_AS(sla_window_stats(run(mw2, loads, sla, 5), loads, sla, 10, 1), StructuralError);
}

TEST_CASE("default window stride") {
  CHECK(default_window_stride(60000) == 3);
  CHECK(default_window_stride(20000) == 1);
  CHECK(default_window_stride(3000000) == 150);
}

TEST_CASE("queue gap against a static comparator grows like sqrt(T) log T") {
  // Static never exceeds the SLA, so it is a valid comparator.
  SlaVector sla({0.2, 0.3, 0.5});
  for (std::size_t steps : {10000u, 100000u}) {
    const double eps = std::pow(static_cast<double>(steps), -0.25);
    SyntheticGammaConfig cfg;
    cfg.steps = steps - steps % 6;
    const auto loads = synthetic_gamma(sla, cfg);
    MwPolicy mw(sla, PolicyParams::canonical(std::min(eps, 0.1), 1.0 / 3.0, 3), MwVariant::kBasic);
    StaticPolicy st(sla);
    const auto check = queue_gap_check(run(mw, loads, sla, 1000), run(st, loads, sla, 1000),
                                       std::min(eps, 0.1), 1.0 / 3.0);
    CAPTURE(check.fitted_constant);
    CHECK(check.holds());
    CHECK(check.gap.size() == 3);
  }
}
