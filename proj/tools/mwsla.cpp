// Experiment runner: `mwsla run <config>` and `mwsla validate <config>`.
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime invariant failure, 3 I/O.
// MWSLA_OUTPUT_DIR overrides the configured output directory.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "mwsla/config.hpp"
#include "mwsla/errors.hpp"
#include "mwsla/experiment.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kIo = 3 };

int validate(const std::string& path) {
  mwsla::Diagnostics diag;
  mwsla::ExperimentConfig config;
  try {
    config = mwsla::load_config(path, &diag);
  } catch (const mwsla::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const mwsla::ConfigError&) {
    // listed below
  }
  for (const auto& w : diag.warnings) std::cout << "warning: " << w << '\n';
  for (const auto& e : diag.errors) std::cout << "error: " << e << '\n';
  if (!diag.ok()) return kConfig;

  std::cout << "ok\n";
  const std::size_t n = config.workload.kind == "trace-csv"
                            ? mwsla::build_loads(config).users()
                            : mwsla::resolve_sla(config).users();
  for (const auto& p : config.policies) {
    if (p.type != "alg1" && p.type != "alg2") continue;
    const auto params = mwsla::mw_params_from(p, n);
    std::cout << "policy " << p.label << ": lambda = " << mwsla::format_number(params.lambda)
              << (params.lambda_canonical ? " (eps^2/(8N))" : " (override)") << '\n';
  }
  return kOk;
}

int run(const std::string& path) {
  try {
    mwsla::Diagnostics diag;
    mwsla::ExperimentConfig config = mwsla::load_config(path, &diag);
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << '\n';
    if (const char* dir = std::getenv("MWSLA_OUTPUT_DIR"); dir && *dir) config.output_dir = dir;

    const mwsla::ExperimentResult result = mwsla::run_experiment(config);
    mwsla::write_outputs(result, config.output_dir);
    std::cout << result.summary.to_text();
    std::cout << "outputs written to " << config.output_dir.string() << '\n';
    return kOk;
  } catch (const mwsla::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const mwsla::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const mwsla::ParseError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative-weight SLA allocation experiments"};
  app.require_subcommand(1);
  std::string run_path, validate_path;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its outputs");
  run_cmd->add_option("config", run_path, "Experiment config file")->required();
  auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
  validate_cmd->add_option("config", validate_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (*run_cmd) return run(run_path);
  return validate(validate_path);
}
