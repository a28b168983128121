#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mwsla/config.hpp"
#include "mwsla/errors.hpp"
#include "mwsla/experiment.hpp"
#include "mwsla/offline.hpp"

using namespace mwsla;

namespace {

bool mentions(const std::vector<std::string>& lines, const std::string& needle) {
  return std::any_of(lines.begin(), lines.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

ExperimentConfig parse_ok(const std::string& text) {
  Diagnostics d;
  auto c = parse_config(text, d);
  validate_config(c, d);
  INFO(d.errors.size());
  REQUIRE(d.ok());
  return c;
}

Diagnostics diagnose(const std::string& text) {
  Diagnostics d;
  auto c = parse_config(text, d);
  if (d.ok()) validate_config(c, d);
  return d;
}

std::filesystem::path source_dir() { return MWSLA_SOURCE_DIR; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_ok(R"(
# comment
[experiment]
epsilon = 0.05   # trailing comment
record_stride = 1
parallel = false

[workload]
kind = synthetic-gamma
T = 600
seed = 9
sla = 0.2, 0.3, 0.5
period = 2*, 3 sla
period = 1, 2 uniform
period = 1*, 3

[policy fast]
type = alg2
eta = 1/3
lambda = 0.001

[policy pg]

[metrics]
work_difference = fast:pg
sla_window = fast
tau = 50
queue_norms = fast
)");
  CHECK(c.epsilon == 0.05);
  CHECK_FALSE(c.parallel);
  CHECK(c.workload.steps == 600);
  CHECK(c.workload.seed == 9);
  REQUIRE(c.workload.periods.size() == 3);
  CHECK(c.workload.periods[0].users == std::vector<std::size_t>{1, 2});
  CHECK(c.workload.periods[0].bulk_user == std::optional<std::size_t>(1));
  CHECK_FALSE(c.workload.periods[1].sla_proportional);
  CHECK(c.workload.periods[2].sla_proportional);
  CHECK(c.workload.periods[2].bulk_user == std::optional<std::size_t>(0));
  REQUIRE(c.policies.size() == 2);
  CHECK(c.find_policy("fast")->type == "alg2");
  CHECK(c.find_policy("pg")->type == "pg");
  CHECK(c.find_policy("nope") == nullptr);
  const auto p = mw_params_from(*c.find_policy("fast"), 3);
  CHECK(p.eta == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(p.lambda_canonical);
  CHECK(c.metrics.work_difference.front() == std::make_pair(std::string("fast"), std::string("pg")));
  CHECK(c.metrics.tau == 50);
}

TEST_CASE("config syntax errors carry line numbers") {
  auto d = diagnose("[experiment]\nepsilon = 0.1\nepsilon = 0.2\n[bogus]\n[workload]\nkind\n");
  CHECK(mentions(d.errors, "line 3"));
  CHECK(mentions(d.errors, "bogus"));
  CHECK(mentions(d.errors, "line 6"));
  d = diagnose("[workload]\nkind = example1\nT = 6\ncolour = red\n[policy static]\n");
  CHECK(mentions(d.errors, "colour"));
  d = diagnose("[workload]\nkind = example1\nT = 6\n[policy static]\n[policy static]\n");
  CHECK_FALSE(d.ok());
}

TEST_CASE("config validation reports every violation") {
  const auto d = diagnose(R"(
[workload]
kind = synthetic-gamma
T = 1000
sla = 0.6, 0.6, 0.1
[policy alg1]
epsilon = 0.5
[policy x/y]
type = static
[metrics]
work_difference = alg1:missing
sla_window = alg1
tau = 5000
)");
  CHECK(mentions(d.errors, "not divisible by 6"));
  CHECK(mentions(d.errors, "SLA sum exceeds 1"));
  CHECK(mentions(d.errors, "epsilon"));
  CHECK(mentions(d.errors, "x/y"));
  CHECK(mentions(d.errors, "missing"));
  CHECK(mentions(d.errors, "tau"));
  CHECK(d.errors.size() >= 6);

  const auto adv = diagnose("[workload]\nkind = adversary\nT = 100\nsla = 0.2,0.3,0.5\n[policy alg1]\n[policy po]\n");
  CHECK(mentions(adv.errors, "N=2"));
  CHECK(mentions(adv.errors, "exactly one online policy"));

  const auto warn = diagnose("[workload]\nkind = example1\nT = 6\nsla = 0.01, 0.49, 0.5\n[policy alg1]\nepsilon = 0.1\n");
  CHECK(warn.ok());
  CHECK(mentions(warn.warnings, "beta(i) >= 2*eps/N violated for user 1"));
}

TEST_CASE("config files: loading and I/O errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);
  Diagnostics d;
  CHECK_THROWS_AS(load_config(source_dir() / "tests/data/bad_sla.ini", &d), ConfigError);
  CHECK(d.errors.size() == 3);
  for (const char* name : {"example1.ini", "adversary.ini", "synthetic.ini", "synthetic_full.ini"}) {
    CAPTURE(name);
    Diagnostics ok;
    CHECK_NOTHROW(load_config(source_dir() / "configs" / name, &ok));
  }
  const auto trace = diagnose("[workload]\nkind = trace-csv\npath = /nonexistent.csv\n[policy static]\n");
  CHECK_FALSE(trace.ok());
}

TEST_CASE("SLA resolution") {
  auto c = parse_ok("[workload]\nkind = example1\nT = 6\n[policy static]\n");
  CHECK(resolve_sla(c).values()[0] == 0.5);
  c = parse_ok("[workload]\nkind = fuzz\nT = 10\nN = 4\n[policy static]\n");
  CHECK(resolve_sla(c).values()[3] == 0.25);
  const auto path = std::filesystem::temp_directory_path() / "mwsla_mean_load.csv";
  {
    std::ofstream(path) << "t,user1,user2\n1,1,3\n";
  }
  c = parse_ok("[workload]\nkind = trace-csv\npath = " + path.string() +
               "\nsla = mean-load\n[policy static]\n");
  const LoadMatrix loads = build_loads(c);
  CHECK(resolve_sla(c, &loads).values()[1] == doctest::Approx(0.75));
  CHECK_THROWS_AS(resolve_sla(c), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("example experiment end to end") {
  Diagnostics d;
  auto config = load_config(source_dir() / "configs/example1.ini", &d);
  const auto result = run_experiment(config);
  const auto& s = result.summary;
  CHECK(s.find("static")->total_work == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(s.find("pg")->total_work == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(s.offline_optimal_eps0 == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(s.offline_optimal_eps == doctest::Approx(6.0 * 0.98).epsilon(1e-12));
  for (const auto& p : s.policies) CHECK(p.total_work <= s.offline_optimal_eps0 + 1e-9);

  // Series agree with the summary.
  REQUIRE(result.cumulative.size() == result.traces.size());
  for (std::size_t i = 0; i < result.traces.size(); ++i) {
    CHECK(result.cumulative[i].name == "cumulative_work_" + result.traces[i].label);
    CHECK(result.cumulative[i].back() ==
          doctest::Approx(s.find(result.traces[i].label)->total_work).epsilon(1e-12));
  }
  REQUIRE(result.differences.size() == 1);
  CHECK(result.differences[0].back() == doctest::Approx(1.0));

  const auto dir = std::filesystem::temp_directory_path() / "mwsla_config_test";
  std::filesystem::remove_all(dir);
  write_outputs(result, dir);
  const std::string summary = slurp(dir / "summary");
  CHECK(summary.find("policy.static.total_work=5\n") != std::string::npos);
  CHECK(summary.find("offline_optimal_eps0=6\n") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "cumulative_work_pg.csv"));
  CHECK(std::filesystem::exists(dir / "work_difference_pg_minus_static.csv"));
  CHECK(std::filesystem::exists(dir / "queue_norm_alg1.csv"));
  CHECK(slurp(dir / "loads.csv").rfind("t,user1,user2,user3\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiments are reproducible and parallelism does not change results") {
  auto config = parse_ok(R"(
[experiment]
assert_invariants = true
[workload]
kind = fuzz
T = 3000
N = 4
seed = 3
[policy alg1]
epsilon = 0.05
[policy alg2]
epsilon = 0.05
[policy owm]
[policy restpg]
[metrics]
work_difference = alg1:alg2
sla_window = alg1
tau = 100
)");
  const auto a = run_experiment(config);
  config.parallel = false;
  const auto b = run_experiment(config);
  for (const auto& p : a.summary.policies) {
    CHECK(p.total_work == b.summary.find(p.label)->total_work);
  }
  CHECK(a.window->mean == b.window->mean);
  CHECK(a.summary.find("alg1")->monitor_violations == std::optional<std::size_t>(0));
  CHECK(*a.summary.find("alg1")->monitor_checks > 0);
}

TEST_CASE("adversary experiment") {
  auto config = parse_ok("[experiment]\nassert_invariants = true\n[workload]\nkind = adversary\nT = 2000\n[policy alg1]\nepsilon = 0.1\n[policy pg]\n");
  const auto r = run_experiment(config);
  REQUIRE(r.summary.adversary);
  CHECK(r.summary.adversary->backlog >= r.summary.adversary->bound);
  CHECK(r.summary.find("pg")->total_work == doctest::Approx(2000.0));
  CHECK(2000.0 - r.summary.find("alg1")->total_work ==
        doctest::Approx(r.summary.adversary->backlog).epsilon(1e-12));
}
