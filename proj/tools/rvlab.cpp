// Command-line runner for configured experiments.
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvlab/errors.hpp"
#include "rvlab/experiment.hpp"
#include "rvlab/io.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitMetricFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

void print_report(const rvlab::RunReport& r, const std::string& dir) {
  std::printf("%s run in %s (config %s)\n", r.kind.c_str(), dir.c_str(), r.config_hash.substr(0, 12).c_str());
  for (const auto& m : r.metrics) {
    std::printf("  %-26s %14.6g  se %-12.4g %s\n", m.name.c_str(), m.estimate, m.se,
                m.tolerance ? (m.pass ? "pass" : "FAIL") : "-");
  }
  for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
}

int cmd_run(const std::string& path, const rvlab::RunOptions& options) {
  const auto config = rvlab::load_config(path);
  const auto dir = rvlab::resolve_output_dir(config, options);
  const auto report = rvlab::run_experiment(config, options);
  print_report(report, dir.string());
  return report.passed() ? kExitPass : kExitMetricFailure;
}

int cmd_validate(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(rvlab::read_file(path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: %s\n", path.c_str(), e.what());
    return kExitConfigError;
  }
  const auto errors = rvlab::validate_config(j);
  for (const auto& e : errors) std::fprintf(stderr, "%s: %s\n", path.c_str(), e.c_str());
  if (!errors.empty()) return kExitConfigError;
  std::printf("%s: ok\n", path.c_str());
  return kExitPass;
}

int cmd_compare(const std::string& a, const std::string& b, double n_se) {
  const auto ra = rvlab::load_report(a);
  const auto rb = rvlab::load_report(b);
  const auto c = rvlab::compare_reports(ra, rb, n_se);
  std::printf("%-26s %14s %14s %14s %12s\n", "metric", "a", "b", "b - a", "se");
  for (const auto& row : c.rows)
    std::printf("%-26s %14.6g %14.6g %14.6g %12.4g%s\n", row.name.c_str(), row.a, row.b, row.diff, row.se,
                row.flagged ? "  FLAG" : "");
  for (const auto& n : c.only_in_a) std::printf("only in %s: %s\n", a.c_str(), n.c_str());
  for (const auto& n : c.only_in_b) std::printf("only in %s: %s\n", b.c_str(), n.c_str());
  return c.mismatch() || c.any_flagged() ? kExitMetricFailure : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed Markov chain and random-coefficient series experiments"};
  app.require_subcommand(1);

  std::string config_path;
  rvlab::RunOptions options;
  auto* run = app.add_subcommand("run", "Run an experiment config and write its report");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", options.output_dir, "Output directory (overrides the config and RVLAB_OUTPUT_ROOT)");
  auto* resume = run->add_flag("--resume", options.resume, "Reuse completed artifacts of an interrupted run");
  run->add_flag("--restart", options.restart, "Discard any previous output first")->excludes(resume);
  run->add_option("--threads", options.threads, "Worker threads (default: RVLAB_THREADS or all cores)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and list every violation");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  std::string a, b;
  double n_se = 3.0;
  auto* compare = app.add_subcommand("compare", "Compare the metrics of two runs");
  compare->add_option("a", a, "Run directory or report.json")->required();
  compare->add_option("b", b, "Run directory or report.json")->required();
  compare->add_option("--n-se", n_se, "Flag differences beyond this many combined s.e.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, options);
    if (*validate) return cmd_validate(validate_path);
    return cmd_compare(a, b, n_se);
  } catch (const rvlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntimeError;
  }
}
