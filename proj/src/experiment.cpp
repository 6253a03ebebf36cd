#include "rvlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "rvlab/config.hpp"
#include "rvlab/errors.hpp"
#include "rvlab/estimators.hpp"
#include "rvlab/io.hpp"
#include "rvlab/markov.hpp"
#include "rvlab/parallel.hpp"
#include "rvlab/random.hpp"
#include "rvlab/series.hpp"
#include "rvlab/tail_chain.hpp"

namespace fs = std::filesystem;

namespace rvlab {

// ---------------------------------------------------------------- tolerances

Tolerance Tolerance::from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": tolerance must be an object");
  auto num = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return it->get<double>();
  };
  Tolerance t;
  if (j.contains("lo") || j.contains("hi")) {
    t.kind = Kind::range;
    t.lo = num("lo");
    t.hi = num("hi");
    if (!(t.lo <= t.hi)) throw ConfigError(where + ": lo exceeds hi");
    return t;
  }
  t.target = num("target");
  if (j.contains("abs")) {
    t.kind = Kind::absolute;
    t.width = num("abs");
  } else if (j.contains("rel")) {
    t.kind = Kind::relative;
    t.width = num("rel");
  } else if (j.contains("n_se")) {
    t.kind = Kind::n_se;
    t.width = num("n_se");
  } else {
    throw ConfigError(where + ": tolerance needs {lo,hi} or target with abs, rel or n_se");
  }
  if (!(t.width >= 0.0)) throw ConfigError(where + ": tolerance width must be nonnegative");
  return t;
}

Json Tolerance::to_json() const {
  switch (kind) {
    case Kind::range:
      return {{"lo", lo}, {"hi", hi}};
    case Kind::absolute:
      return {{"target", target}, {"abs", width}};
    case Kind::relative:
      return {{"target", target}, {"rel", width}};
    case Kind::n_se:
      return {{"target", target}, {"n_se", width}};
  }
  return {};
}

bool Tolerance::accepts(double estimate, double se) const {
  if (!std::isfinite(estimate)) return false;
  switch (kind) {
    case Kind::range:
      return estimate >= lo && estimate <= hi;
    case Kind::absolute:
      return std::abs(estimate - target) <= width;
    case Kind::relative:
      return std::abs(estimate - target) <= width * std::abs(target);
    case Kind::n_se:
      // The floor absorbs round-off when the estimate is exact and se is ~0.
      return std::abs(estimate - target) <= width * se + 1e-12 * std::max(1.0, std::abs(target));
  }
  return false;
}

// ---------------------------------------------------------------- config

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"rde-stationary",   "tail-chain",         "spectral-xn", "spectral-pi",
                                              "series-adaptable", "series-predictable", "diagnostics"};
  return kinds;
}

const std::vector<std::string>& metric_names(const std::string& kind) {
  static const std::map<std::string, std::vector<std::string>> names{
      {"rde-stationary", {"hill_alpha", "tail_constant_ratio", "series_hill_alpha", "route_gap"}},
      {"tail-chain", {"rho_star", "moment_bound_exceedances", "closed_form_max_dev"}},
      {"spectral-xn", {"permutation_p", "pass_fraction", "energy_distance", "normalizer"}},
      {"spectral-pi", {"rho_star", "permutation_p", "energy_distance", "normalizer", "exceedances"}},
      {"series-adaptable", {"hill_alpha", "contractivity", "lambda_hat", "truncation_warnings", "tail_index_claimed"}},
      {"series-predictable", {"hill_alpha", "contractivity", "lambda_hat", "truncation_warnings", "tail_index_claimed"}},
      {"diagnostics", {"hill_alpha", "tail_ratio", "single_jump_max", "monotonicity_violations", "drift_gamma"}},
  };
  static const std::vector<std::string> none;
  const auto it = names.find(kind);
  return it == names.end() ? none : it->second;
}

namespace {

// Size keys, their defaults and whether they may be zero.
struct SizeSpec {
  const char* key;
  double fallback;
  bool integer = true;
};

const std::vector<SizeSpec>& size_specs(const std::string& kind) {
  static const std::map<std::string, std::vector<SizeSpec>> specs{
      {"rde-stationary",
       {{"n", 100000}, {"burn_in", 1000}, {"spacing", 5}, {"hill_k", 0}, {"quantile_t", 1000, false},
        {"series_n", 0}, {"series_terms", 60}, {"batches", 100}}},
      {"tail-chain", {{"n_directions", 32}, {"n_rep", 2000}, {"n_max", 8}, {"moment_rep", 5000}, {"n_theta", 8}}},
      {"spectral-xn",
       {{"n", 3}, {"trajectories", 100000}, {"brute_trajectories", 1000000}, {"quantile_t", 1000, false},
        {"n_perm", 199}}},
      {"spectral-pi",
       {{"stationary_n", 1000000}, {"burn_in", 1000}, {"spacing", 2}, {"trajectories", 50000}, {"j_max", 20},
        {"n_directions", 32}, {"n_rep", 4000}, {"quantile_t", 1000, false}, {"n_perm", 199}}},
      {"series-adaptable",
       {{"n", 100000}, {"hill_k", 0}, {"calibration_n", 2000}, {"contractivity_n", 100000},
        {"trajectories", 100000}, {"j_max", 30}}},
      {"series-predictable",
       {{"n", 100000}, {"hill_k", 0}, {"calibration_n", 2000}, {"contractivity_n", 100000},
        {"trajectories", 100000}, {"k_max", 30}, {"j_max", 30}}},
      {"diagnostics", {{"n", 100000}, {"hill_k", 0}, {"mono_n", 100000}, {"drift_rep", 2000}, {"tail_c", 2, false}}},
  };
  static const std::vector<SizeSpec> none;
  const auto it = specs.find(kind);
  return it == specs.end() ? none : it->second;
}

// Model sections each kind requires, checked by building them.
void check_model(const std::string& kind, const Json& model, std::vector<std::string>& errors) {
  auto attempt = [&](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    } catch (const std::exception& e) {
      errors.push_back(std::string("model: ") + e.what());
    }
  };
  auto need = [&](const char* key) {
    if (!model.contains(key)) {
      errors.push_back(std::string("model: missing key '") + key + "'");
      return false;
    }
    return true;
  };
  if (!model.is_object()) {
    errors.push_back("model: expected an object");
    return;
  }
  if (kind == "rde-stationary") {
    if (need("rde")) attempt([&] {
        const RdeModel m = parse_rde(model["rde"], "model.rde");
        if (!m.b_law.heavy()) throw ConfigError("model.rde.b: rde-stationary needs a regularly varying B");
      });
  } else if (kind == "tail-chain") {
    attempt([&] { parse_tail_limits(model, "model"); });
  } else if (kind == "spectral-xn") {
    if (need("rde")) attempt([&] { rde_tail_limits(parse_rde(model["rde"], "model.rde")); });
    if (need("x0")) attempt([&] { parse_vector(model["x0"], "model.x0"); });
  } else if (kind == "spectral-pi") {
    if (need("rde")) attempt([&] { rde_tail_limits(parse_rde(model["rde"], "model.rde")); });
    if (need("gauge")) attempt([&] { parse_gauge(model["gauge"], "model.gauge"); });
    if (model.contains("restriction") && model["restriction"] != "complement" && model["restriction"] != "cone")
      errors.push_back("model.restriction: expected \"complement\" or \"cone\"");
  } else if (kind == "series-adaptable" || kind == "series-predictable") {
    const SeriesMode mode = kind == "series-adaptable" ? SeriesMode::adaptable : SeriesMode::predictable;
    if (need("series")) attempt([&] { parse_series(model["series"], mode, "model.series"); });
    if (model.contains("index_variant") && model["index_variant"] != "previous" && model["index_variant"] != "current")
      errors.push_back("model.index_variant: expected \"previous\" or \"current\"");
    if (model.contains("weighting") && model["weighting"] != "pooled" && model["weighting"] != "per_trajectory")
      errors.push_back("model.weighting: expected \"pooled\" or \"per_trajectory\"");
  } else if (kind == "diagnostics") {
    if (need("law")) attempt([&] { parse_regvar(model["law"], "model.law"); });
    if (model.contains("monotonicity")) attempt([&] {
        const Json& m = model["monotonicity"];
        parse_rde(m.at("rde"), "model.monotonicity.rde");
        parse_gauge(m.at("gauge"), "model.monotonicity.gauge");
        if (!m.contains("pairs") || !m["pairs"].is_array())
          throw ConfigError("model.monotonicity.pairs: expected [[x, y], ...]");
      });
    if (model.contains("drift")) attempt([&] {
        const Json& d = model["drift"];
        parse_rde(d.at("rde"), "model.drift.rde");
        if (!d.contains("grid") || !d["grid"].is_array() || d["grid"].empty())
          throw ConfigError("model.drift.grid: expected a nonempty array of states");
      });
  }
}

}  // namespace

std::vector<std::string> validate_config(const Json& j) {
  std::vector<std::string> errors;
  if (!j.is_object()) return {"config: expected a JSON object"};
  static const std::set<std::string> known{"kind", "name", "seed", "streams", "output_dir", "model",
                                           "sizes", "tolerances", "minorization_asserted", "description"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) errors.push_back("config: unknown key '" + key + "'");

  std::string kind;
  if (!j.contains("kind") || !j["kind"].is_string()) {
    errors.push_back("kind: missing or not a string");
  } else {
    kind = j["kind"].get<std::string>();
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
      errors.push_back("kind: unknown experiment kind '" + kind + "'");
      kind.clear();
    }
  }
  if (!j.contains("seed")) {
    errors.push_back("seed: missing");
  } else if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
    errors.push_back("seed: must be a nonnegative integer");
  }
  if (j.contains("streams") && (!j["streams"].is_number_integer() || j["streams"].get<long long>() < 1))
    errors.push_back("streams: must be an integer >= 1");
  if (j.contains("output_dir") && !j["output_dir"].is_string()) errors.push_back("output_dir: must be a string");
  if (j.contains("name") && !j["name"].is_string()) errors.push_back("name: must be a string");
  if (j.contains("minorization_asserted") && !j["minorization_asserted"].is_boolean())
    errors.push_back("minorization_asserted: must be a boolean");

  if (!j.contains("model")) {
    errors.push_back("model: missing");
  } else if (!kind.empty()) {
    check_model(kind, j["model"], errors);
  }

  if (j.contains("sizes")) {
    const Json& sizes = j["sizes"];
    if (!sizes.is_object()) {
      errors.push_back("sizes: expected an object");
    } else if (!kind.empty()) {
      const auto& specs = size_specs(kind);
      for (const auto& [key, value] : sizes.items()) {
        const auto it = std::find_if(specs.begin(), specs.end(), [&](const SizeSpec& s) { return key == s.key; });
        if (it == specs.end()) {
          errors.push_back("sizes." + key + ": unknown size for kind " + kind);
        } else if (!value.is_number() || !(value.get<double>() >= 1.0) ||
                   (it->integer && value.get<double>() != std::floor(value.get<double>()))) {
          errors.push_back("sizes." + key + (it->integer ? ": must be an integer >= 1" : ": must be a number >= 1"));
        }
      }
    }
  }

  if (j.contains("tolerances")) {
    const Json& tol = j["tolerances"];
    if (!tol.is_object()) {
      errors.push_back("tolerances: expected an object");
    } else {
      for (const auto& [name, value] : tol.items()) {
        if (!kind.empty()) {
          const auto& names = metric_names(kind);
          if (std::find(names.begin(), names.end(), name) == names.end())
            errors.push_back("tolerances." + name + ": kind " + kind + " reports no such metric");
        }
        try {
          Tolerance::from_json(value, "tolerances." + name);
        } catch (const ConfigError& e) {
          errors.push_back(e.what());
        }
      }
    }
  }
  return errors;
}

ExperimentConfig parse_config(const Json& j) {
  const auto errors = validate_config(j);
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << errors.size() << " configuration error" << (errors.size() == 1 ? "" : "s") << ":";
    for (const auto& e : errors) msg << "\n  " << e;
    throw ConfigError(msg.str());
  }
  ExperimentConfig c;
  c.raw = j;
  c.kind = j["kind"].get<std::string>();
  c.name = j.value("name", c.kind);
  c.seed = j["seed"].get<std::uint64_t>();
  c.streams = j.value("streams", std::uint64_t{1});
  c.output_dir = j.value("output_dir", std::string());
  c.model = j["model"];
  c.sizes = j.value("sizes", Json::object());
  c.minorization_asserted = j.value("minorization_asserted", false);
  if (j.contains("tolerances"))
    for (const auto& [name, value] : j["tolerances"].items())
      c.tolerances.emplace(name, Tolerance::from_json(value, "tolerances." + name));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------- reports

bool RunReport::passed() const {
  return error.empty() && std::all_of(metrics.begin(), metrics.end(), [](const MetricRow& m) { return m.pass; });
}

const MetricRow* RunReport::find(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

Json RunReport::to_json() const {
  Json rows = Json::array();
  for (const auto& m : metrics) {
    Json row{{"name", m.name}, {"estimate", m.estimate}, {"se", m.se}, {"pass", m.pass}};
    row["tolerance"] = m.tolerance ? m.tolerance->to_json() : Json(nullptr);
    if (!m.note.empty()) row["note"] = m.note;
    rows.push_back(row);
  }
  Json j{{"kind", kind},         {"config_hash", config_hash}, {"input_hash", input_hash}, {"seed", seed},
         {"streams", streams},   {"metrics", rows},            {"warnings", warnings},     {"outputs", outputs},
         {"passed", passed()}};
  if (!error.empty()) j["error"] = error;
  return j;
}

RunReport RunReport::from_json(const Json& j) {
  RunReport r;
  r.kind = j.at("kind").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.input_hash = j.value("input_hash", std::string());
  r.seed = j.value("seed", std::uint64_t{0});
  r.streams = j.value("streams", std::uint64_t{1});
  for (const auto& row : j.at("metrics")) {
    MetricRow m;
    m.name = row.at("name").get<std::string>();
    m.estimate = row.at("estimate").is_number() ? row["estimate"].get<double>() : std::nan("");
    m.se = row.at("se").is_number() ? row["se"].get<double>() : std::nan("");
    m.pass = row.at("pass").get<bool>();
    if (row.contains("tolerance") && !row["tolerance"].is_null())
      m.tolerance = Tolerance::from_json(row["tolerance"], "report.tolerance");
    m.note = row.value("note", std::string());
    r.metrics.push_back(m);
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.outputs = j.value("outputs", std::map<std::string, std::string>{});
  r.error = j.value("error", std::string());
  return r;
}

RunReport load_report(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "report.json";
  try {
    return RunReport::from_json(Json::parse(read_file(p.string())));
  } catch (const Json::exception& e) {
    throw std::runtime_error(p.string() + ": unreadable report: " + e.what());
  }
}

bool CompareReport::any_flagged() const {
  return std::any_of(rows.begin(), rows.end(), [](const CompareRow& r) { return r.flagged; });
}

CompareReport compare_reports(const RunReport& a, const RunReport& b, double n_se) {
  CompareReport c;
  for (const auto& m : a.metrics) {
    const MetricRow* other = b.find(m.name);
    if (!other) {
      c.only_in_a.push_back(m.name);
      continue;
    }
    CompareRow row;
    row.name = m.name;
    row.a = m.estimate;
    row.b = other->estimate;
    row.diff = other->estimate - m.estimate;
    row.se = std::sqrt(m.se * m.se + other->se * other->se);
    row.flagged = std::abs(row.diff) > n_se * row.se || (std::isnan(row.diff) && !(std::isnan(row.a) && std::isnan(row.b)));
    c.rows.push_back(row);
  }
  for (const auto& m : b.metrics)
    if (!a.find(m.name)) c.only_in_b.push_back(m.name);
  return c;
}

std::map<std::string, std::string> output_hashes(const std::string& dir) {
  std::map<std::string, std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "timing.json" || entry.path().extension() == ".tmp") continue;
    out[rel] = sha1_hex(read_file(entry.path().string()));
  }
  return out;
}

// ---------------------------------------------------------------- artifacts

ArtifactStore::ArtifactStore(fs::path dir, std::string config_hash, bool resume)
    : dir_(std::move(dir)), config_hash_(std::move(config_hash)) {
  const fs::path manifest = dir_ / "manifest.json";
  if (resume && fs::exists(manifest)) {
    Json m;
    try {
      m = Json::parse(read_file(manifest.string()));
    } catch (const std::exception& e) {
      throw std::runtime_error(manifest.string() + ": unreadable manifest; rerun with --restart");
    }
    if (m.value("config_hash", std::string()) != config_hash_)
      throw std::runtime_error(dir_.string() + " holds a run of a different config; rerun with --restart");
    artifacts_ = m.value("artifacts", Json::object());
  } else if (fs::exists(dir_)) {
    if (!fs::exists(manifest) && !fs::is_empty(dir_))
      throw std::runtime_error(dir_.string() + " is not empty and holds no run manifest; refusing to overwrite it");
    for (const auto& entry : fs::directory_iterator(dir_)) fs::remove_all(entry.path());
  }
  fs::create_directories(dir_);
  write_manifest();
}

Matrix ArtifactStore::get_or_compute(const std::string& name, const std::function<Matrix()>& compute) {
  const std::string file = name + ".bin";
  const fs::path path = dir_ / file;
  if (artifacts_.contains(file) && fs::exists(path)) {
    const std::string bytes = read_file(path.string());
    if (sha1_hex(bytes) == artifacts_[file].get<std::string>()) {
      ++reused_;
      return read_columns(path.string());
    }
  }
  Matrix m = compute();
  write_columns(path.string(), m);
  artifacts_[file] = sha1_hex(read_file(path.string()));
  write_manifest();
  return m;
}

void ArtifactStore::record_output(const std::string& relative) {
  artifacts_[relative] = sha1_hex(read_file((dir_ / relative).string()));
  write_manifest();
}

void ArtifactStore::mark_complete() {
  complete_ = true;
  write_manifest();
}

void ArtifactStore::write_manifest() const {
  const Json m{{"config_hash", config_hash_}, {"complete", complete_}, {"artifacts", artifacts_}};
  write_file_atomic((dir_ / "manifest.json").string(), m.dump(2) + "\n");
}

fs::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (!options.output_dir.empty()) return options.output_dir;
  const char* root_env = std::getenv("RVLAB_OUTPUT_ROOT");
  const fs::path root = root_env && *root_env ? fs::path(root_env) : fs::path("runs");
  if (config.output_dir.empty()) return root / config.name;
  const fs::path given(config.output_dir);
  return given.is_absolute() || !(root_env && *root_env) ? given : root / given;
}

}  // namespace rvlab
