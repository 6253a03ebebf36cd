#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvlab/rv_core.hpp"

namespace rvlab {

using Json = nlohmann::json;

struct Tolerance {
  enum class Kind { range, absolute, relative, n_se };
  Kind kind = Kind::range;
  double lo = 0.0;
  double hi = 0.0;
  double target = 0.0;
  double width = 0.0;  // abs, rel or n_se depending on kind

  static Tolerance from_json(const Json& j, const std::string& where);
  Json to_json() const;
  bool accepts(double estimate, double se) const;
};

struct ExperimentConfig {
  std::string kind;
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t streams = 1;
  std::string output_dir;
  Json model;
  Json sizes;
  std::map<std::string, Tolerance> tolerances;
  bool minorization_asserted = false;
  Json raw;
};

const std::vector<std::string>& experiment_kinds();
// Metric names an experiment kind can report.
const std::vector<std::string>& metric_names(const std::string& kind);

// Every violation in the document, as "key.path: message" strings.
std::vector<std::string> validate_config(const Json& j);
// Throws ConfigError listing every violation.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

struct MetricRow {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  std::optional<Tolerance> tolerance;
  bool pass = true;
  std::string note;
};

struct RunReport {
  std::string kind;
  std::string config_hash;
  std::string input_hash;
  std::uint64_t seed = 0;
  std::uint64_t streams = 1;
  std::vector<MetricRow> metrics;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> outputs;  // relative path -> SHA-1
  std::string error;
  double wall_seconds = 0.0;  // written to timing.json, not report.json

  bool passed() const;
  const MetricRow* find(const std::string& name) const;
  Json to_json() const;
  static RunReport from_json(const Json& j);
};

struct RunOptions {
  std::string output_dir;  // overrides the config and RVLAB_OUTPUT_ROOT
  bool resume = false;
  bool restart = false;
  unsigned threads = 0;
};

// Raised after a module failure; the partial report is already on disk.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options);
RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
RunReport load_report(const std::string& path);

struct CompareRow {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  double diff = 0.0;
  double se = 0.0;
  bool flagged = false;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<std::string> only_in_a;
  std::vector<std::string> only_in_b;
  bool mismatch() const { return !only_in_a.empty() || !only_in_b.empty(); }
  bool any_flagged() const;
};

CompareReport compare_reports(const RunReport& a, const RunReport& b, double n_se = 3.0);

// SHA-1 of every output file under dir except timing.json, keyed by relative path.
std::map<std::string, std::string> output_hashes(const std::string& dir);

// Named sample matrices persisted under a run directory with a manifest, so an
// interrupted run can resume from the artifacts it completed.
class ArtifactStore {
 public:
  ArtifactStore(std::filesystem::path dir, std::string config_hash, bool resume);

  Matrix get_or_compute(const std::string& name, const std::function<Matrix()>& compute);
  // Records a file written by the caller (relative to the run directory).
  void record_output(const std::string& relative);
  void mark_complete();
  const std::filesystem::path& dir() const { return dir_; }
  std::size_t reused() const { return reused_; }

 private:
  void write_manifest() const;

  std::filesystem::path dir_;
  std::string config_hash_;
  Json artifacts_ = Json::object();
  bool complete_ = false;
  std::size_t reused_ = 0;
};

}  // namespace rvlab
