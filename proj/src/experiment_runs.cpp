#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "rvlab/config.hpp"
#include "rvlab/errors.hpp"
#include "rvlab/estimators.hpp"
#include "rvlab/experiment.hpp"
#include "rvlab/io.hpp"
#include "rvlab/markov.hpp"
#include "rvlab/parallel.hpp"
#include "rvlab/random.hpp"
#include "rvlab/series.hpp"
#include "rvlab/tail_chain.hpp"

namespace fs = std::filesystem;

namespace rvlab {

namespace {

constexpr double kPermutationLevel = 0.01;

class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg, ArtifactStore& store, RunReport& report)
      : cfg_(cfg), store_(store), report_(report) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  ArtifactStore& store() { return store_; }

  double size(const char* key, double fallback) const {
    return cfg_.sizes.contains(key) ? cfg_.sizes[key].get<double>() : fallback;
  }
  std::size_t count(const char* key, std::size_t fallback) const {
    return static_cast<std::size_t>(size(key, static_cast<double>(fallback)));
  }
  // Independent stream per stage, so reusing a stored artifact does not shift
  // the draws of later stages.
  Stream stream(std::uint64_t stage) const { return Stream(cfg_.seed, stage); }

  void metric(const std::string& name, double estimate, double se, std::string note = {}) {
    MetricRow row;
    row.name = name;
    row.estimate = estimate;
    row.se = se;
    row.note = std::move(note);
    const auto it = cfg_.tolerances.find(name);
    if (it != cfg_.tolerances.end()) {
      row.tolerance = it->second;
      row.pass = it->second.accepts(estimate, se);
    }
    report_.metrics.push_back(row);
  }
  void warn(std::string w) { report_.warnings.push_back(std::move(w)); }

  void write(const std::string& relative, const std::string& bytes) {
    write_file_atomic((store_.dir() / relative).string(), bytes);
    store_.record_output(relative);
  }
  void write_curve(const std::string& relative, const DiagnosticCurve& curve) {
    std::ostringstream out;
    curve.write_csv(out);
    write(relative, out.str());
    const auto flagged = std::count_if(curve.points.begin(), curve.points.end(), [](const auto& p) { return p.flagged; });
    if (flagged > 0) warn(relative + ": " + std::to_string(flagged) + " flagged grid points");
  }
  void write_spectral_output(const std::string& relative, const EmpiricalAngularMeasure& m, const SpectralSidecar& side) {
    write_spectral((store_.dir() / relative).string(), m, side);
    store_.record_output(relative);
    store_.record_output(relative + ".json");
  }

 private:
  const ExperimentConfig& cfg_;
  ArtifactStore& store_;
  RunReport& report_;
};

std::vector<double> column_norms(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m.col(j).norm();
  return out;
}

int hill_k(const RunContext& ctx, std::size_t n) {
  const auto k = ctx.count("hill_k", 0);
  return k > 0 ? static_cast<int>(std::min(k, n - 1)) : default_hill_k(n);
}

void hill_outputs(RunContext& ctx, const std::vector<double>& radii, const std::string& metric) {
  const int k = hill_k(ctx, radii.size());
  const auto h = hill(radii, k);
  ctx.metric(metric, h.alpha_hat, h.se, "k=" + std::to_string(k));
  std::vector<int> grid;
  for (int g : {10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000})
    if (static_cast<std::size_t>(g) < radii.size()) grid.push_back(g);
  if (std::find(grid.begin(), grid.end(), k) == grid.end() && static_cast<std::size_t>(k) < radii.size()) {
    grid.push_back(k);
    std::sort(grid.begin(), grid.end());
  }
  ctx.write_curve(metric == "hill_alpha" ? "hill_sweep.csv" : metric + "_sweep.csv", hill_sweep(radii, grid));
}

double fraction_above(const std::vector<double>& x, double level) {
  return static_cast<double>(std::count_if(x.begin(), x.end(), [&](double v) { return v > level; })) /
         static_cast<double>(x.size());
}

// Batch-means s.e. of the exceedance proportion of a serially dependent sequence.
double batch_se(const std::vector<double>& x, double level, std::size_t batches) {
  batches = std::max<std::size_t>(2, std::min(batches, x.size() / 2));
  const std::size_t per = x.size() / batches;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t c = 0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) c += x[i] > level ? 1 : 0;
    const double p = static_cast<double>(c) / static_cast<double>(per);
    sum += p;
    sum2 += p * p;
  }
  const double nb = static_cast<double>(batches);
  const double mean = sum / nb;
  return std::sqrt(std::max(0.0, sum2 / nb - mean * mean) / (nb - 1.0));
}

// Atoms as columns [w; direction], followed by one column of run statistics.
Matrix pack_measure(const EmpiricalAngularMeasure& m, const std::vector<double>& stats) {
  const Eigen::Index d = m.directions.rows();
  Matrix out = Matrix::Zero(std::max<Eigen::Index>(d + 1, static_cast<Eigen::Index>(stats.size())), m.directions.cols() + 1);
  for (Eigen::Index j = 0; j < m.directions.cols(); ++j) {
    out(0, j) = m.weights[static_cast<std::size_t>(j)];
    out.col(j).segment(1, d) = m.directions.col(j);
  }
  for (std::size_t i = 0; i < stats.size(); ++i) out(static_cast<Eigen::Index>(i), out.cols() - 1) = stats[i];
  return out;
}

EmpiricalAngularMeasure unpack_measure(const Matrix& packed, Eigen::Index d) {
  EmpiricalAngularMeasure out;
  out.source = EmpiricalAngularMeasure::Source::theoretical_sampler;
  const Eigen::Index n = packed.cols() - 1;
  out.directions = packed.block(1, 0, d, n);
  for (Eigen::Index j = 0; j < n; ++j) out.weights.push_back(packed(0, j));
  return out;
}

double packed_stat(const Matrix& packed, int i) { return packed(i, packed.cols() - 1); }

EmpiricalAngularMeasure unweighted(const Matrix& directions) {
  EmpiricalAngularMeasure out;
  out.directions = directions;
  out.weights.assign(static_cast<std::size_t>(directions.cols()), 1.0 / static_cast<double>(directions.cols()));
  return out;
}

std::string format_double(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

// ---------------------------------------------------------------- kinds

void run_rde_stationary(RunContext& ctx) {
  const RdeModel rde = parse_rde(ctx.cfg().model["rde"], "model.rde");
  const std::size_t n = ctx.count("n", 100000);
  StationarySampler sampler{rde.as_markov(), ctx.count("burn_in", 1000), ctx.count("spacing", 5), Vector::Zero(rde.dim)};
  const Matrix states = ctx.store().get_or_compute("stationary", [&] {
    Stream s = ctx.stream(1);
    return stack_columns(stationary_samples(sampler, n, s));
  });
  const auto radii = column_norms(states);
  hill_outputs(ctx, radii, "hill_alpha");

  const double t = ctx.size("quantile_t", 1000.0);
  const double level = TailNormalizer(radii)(t);
  const double surv = rde.b_law.heavy()->radius_survival(level);
  const double p_direct = fraction_above(radii, level);
  const double se_direct = batch_se(radii, level, ctx.count("batches", 100));
  ctx.metric("tail_constant_ratio", p_direct / surv, se_direct / surv, "level=" + format_double(level));

  std::vector<double> thresholds;
  for (double q : {10.0, 30.0, 100.0, 300.0, 1000.0})
    if (q * 50.0 <= static_cast<double>(n)) {
      const double v = TailNormalizer(radii)(q);
      if (thresholds.empty() || v > thresholds.back()) thresholds.push_back(v);
    }
  if (!thresholds.empty()) ctx.write_curve("tail_ratio.csv", tail_ratio_check(radii, 2.0, thresholds));

  const std::size_t series_n = ctx.count("series_n", n);
  const std::size_t terms = ctx.count("series_terms", 60);
  const Matrix series = ctx.store().get_or_compute("series", [&] {
    Stream s = ctx.stream(2);
    Matrix m(rde.dim, static_cast<Eigen::Index>(series_n));
    for (std::size_t i = 0; i < series_n; ++i) m.col(static_cast<Eigen::Index>(i)) = rde_series_sample(rde, terms, s);
    return m;
  });
  const auto series_radii = column_norms(series);
  hill_outputs(ctx, series_radii, "series_hill_alpha");
  const double p_series = fraction_above(series_radii, level);
  const double se_series = std::sqrt(p_series * (1.0 - p_series) / static_cast<double>(series_n));
  ctx.metric("route_gap", (p_direct - p_series) / surv, std::hypot(se_direct, se_series) / surv,
             "direct minus series tail ratio at the same level");
}

void run_tail_chain(RunContext& ctx) {
  const Json& model = ctx.cfg().model;
  const TailLimitModel limits = parse_tail_limits(model, "model");
  Stream rho_stream = ctx.stream(1);
  const auto rho = estimate_rho_star(limits, static_cast<int>(ctx.count("n_directions", 32)), ctx.count("n_rep", 2000),
                                     rho_stream);
  ctx.metric("rho_star", rho.value, rho.se, "lower bound from probed directions");

  std::vector<Vector> thetas;
  const auto n_theta = ctx.count("n_theta", 8);
  if (limits.dim == 1) {
    thetas = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  } else if (limits.dim == 2) {
    for (std::size_t i = 0; i < n_theta; ++i) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_theta);
      thetas.push_back((Vector(2) << std::cos(phi), std::sin(phi)).finished());
    }
  } else {
    Stream s = ctx.stream(2);
    const auto sphere = AngularLaw::uniform(limits.dim);
    for (std::size_t i = 0; i < n_theta; ++i) thetas.push_back(sphere.sample(s));
  }
  std::vector<int> n_grid;
  for (int k = 1; k <= static_cast<int>(ctx.count("n_max", 8)); ++k) n_grid.push_back(k);
  Stream moment_stream = ctx.stream(3);
  const auto bound = verify_z_moment_bound(limits, rho, thetas, n_grid, ctx.count("moment_rep", 5000), moment_stream);
  ctx.metric("moment_bound_exceedances", static_cast<double>(bound.exceedances()), 0.0,
             "cells above rho*^n + 3 s.e.");

  std::ostringstream csv;
  csv << std::setprecision(17) << "theta_index,n,mean,se,bound,exceeded\n";
  for (const auto& c : bound.cells)
    csv << c.theta_index << ',' << c.n << ',' << c.mean << ',' << c.se << ',' << c.bound << ',' << (c.exceeded ? 1 : 0)
        << '\n';
  ctx.write("moments.csv", csv.str());

  if (model.contains("closed_form_base")) {
    const double base = model["closed_form_base"].get<double>();
    double worst = 0.0;
    for (const auto& c : bound.cells) {
      const double target = std::pow(base, c.n);
      worst = std::max(worst, std::abs(c.mean - target) / std::max(c.se, 1e-12 * target));
    }
    ctx.metric("closed_form_max_dev", worst, 0.0, "max |mean - base^n| in s.e. units");
  }
}

struct PermutationOutcome {
  double p = 1.0;
  double statistic = 0.0;
};

PermutationOutcome compare_to_brute(const Matrix& brute, const EmpiricalAngularMeasure& sampled, int n_perm, Stream rng) {
  if (brute.cols() < 2) throw DegenerateSample("too few brute-force exceedances for a permutation test");
  const Matrix draws = sampled.resample(static_cast<std::size_t>(brute.cols()), rng);
  const auto test = permutation_test(brute, draws, n_perm, rng);
  return {test.p_value, test.statistic};
}

void run_spectral_xn(RunContext& ctx) {
  const Json& model = ctx.cfg().model;
  const RdeModel rde = parse_rde(model["rde"], "model.rde");
  const auto chain = rde.as_markov();
  const auto limits = rde_tail_limits(rde);
  const Vector x0 = parse_vector(model["x0"], "model.x0");
  if (x0.size() != rde.dim) throw ConfigError("model.x0: dimension differs from the model");
  const int n = static_cast<int>(ctx.count("n", 3));
  const std::size_t traj = ctx.count("trajectories", 100000);
  const std::size_t brute_n = ctx.count("brute_trajectories", 1000000);
  const int k = std::max(2, static_cast<int>(static_cast<double>(brute_n) / ctx.size("quantile_t", 1000.0)));
  const int n_perm = static_cast<int>(ctx.count("n_perm", 199));
  std::size_t passes = 0;
  for (std::uint64_t r = 0; r < ctx.cfg().streams; ++r) {
    const std::string tag = std::to_string(r);
    const Matrix brute = ctx.store().get_or_compute("brute_" + tag, [&] {
      const Stream root = ctx.stream(10).split(r);
      Matrix xs(rde.dim, static_cast<Eigen::Index>(brute_n));
      parallel_for(brute_n, [&](std::size_t i) {
        Stream s = root.split(i);
        Vector x = x0;
        for (int step = 0; step < n; ++step) x = chain.step(x, s);
        xs.col(static_cast<Eigen::Index>(i)) = x;
      });
      return empirical_angular(xs, k).directions;
    });
    const Matrix theta = ctx.store().get_or_compute("theta_" + tag, [&] {
      Stream s = ctx.stream(11).split(r);
      const auto res = sample_theta_n(chain, limits, x0, n, traj, s);
      return pack_measure(res.measure, {res.normalizer, res.normalizer_se});
    });
    const double normalizer = packed_stat(theta, 0), normalizer_se = packed_stat(theta, 1);
    const auto measure = unpack_measure(theta, rde.dim);
    const auto outcome = compare_to_brute(brute, measure, n_perm, ctx.stream(12).split(r));
    if (outcome.p > kPermutationLevel) ++passes;
    if (r == 0) {
      ctx.metric("permutation_p", outcome.p, 0.0, "energy-distance permutation test, stream 0");
      ctx.metric("energy_distance", outcome.statistic, 0.0);
      ctx.metric("normalizer", normalizer, normalizer_se, "C_n estimate");
      ctx.write_spectral_output("spectral_xn.csv", measure, {normalizer, normalizer_se, -1, {}});
      ctx.write_spectral_output("brute_directions.csv", unweighted(brute), {0.0, 0.0, -1, {"empirical_exceedance"}});
    }
  }
  const double s = static_cast<double>(ctx.cfg().streams);
  const double f = static_cast<double>(passes) / s;
  ctx.metric("pass_fraction", f, std::sqrt(f * (1.0 - f) / s), "streams with permutation p > 0.01");
}

void run_spectral_pi(RunContext& ctx) {
  const Json& model = ctx.cfg().model;
  const RdeModel rde = parse_rde(model["rde"], "model.rde");
  const auto limits = rde_tail_limits(rde);
  const GaugeSet k = parse_gauge(model["gauge"], "model.gauge");
  if (k.dim() != rde.dim) throw ConfigError("model.gauge: dimension differs from the model");
  const auto restriction =
      model.value("restriction", std::string("complement")) == "cone" ? ConeRestriction::cone : ConeRestriction::complement;
  Stream rho_stream = ctx.stream(20);
  const auto rho = estimate_rho_star(limits, static_cast<int>(ctx.count("n_directions", 32)), ctx.count("n_rep", 4000),
                                     rho_stream, {}, k.margin());
  ctx.metric("rho_star", rho.value, rho.se);
  if (!rho.contractive()) {
    std::ostringstream msg;
    msg << "spectral-pi requires rho* < 1 but estimate_rho_star gives " << rho.value;
    throw PreconditionError(msg.str());
  }
  StationarySampler sampler{rde.as_markov(), ctx.count("burn_in", 1000), ctx.count("spacing", 2), Vector::Zero(rde.dim)};
  const std::size_t stationary_n = ctx.count("stationary_n", 1000000);
  const Matrix brute = ctx.store().get_or_compute("brute", [&] {
    Stream s = ctx.stream(21);
    const auto states = stationary_samples(sampler, stationary_n, s);
    std::vector<double> radii(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) radii[i] = states[i].norm();
    const double level = TailNormalizer(radii)(ctx.size("quantile_t", 1000.0));
    std::vector<Vector> dirs;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (radii[i] > level && !k.in_cone(states[i]))
        dirs.push_back(states[i] / radii[i]);
    return stack_columns(dirs);
  });
  ctx.metric("exceedances", static_cast<double>(brute.cols()), 0.0, "stationary exceedances off the cone K_0");
  const int j_max = static_cast<int>(ctx.count("j_max", 20));
  const Matrix theta = ctx.store().get_or_compute("theta", [&] {
    Stream s = ctx.stream(22);
    const auto res = sample_theta_pi(sampler, limits, k, rho, j_max, ctx.count("trajectories", 50000), s, restriction);
    return pack_measure(res.measure, {res.normalizer, res.normalizer_se, res.truncation_bound});
  });
  const double normalizer = packed_stat(theta, 0), normalizer_se = packed_stat(theta, 1);
  const double truncation = packed_stat(theta, 2);
  const auto measure = unpack_measure(theta, rde.dim);
  std::vector<std::string> flags;
  if (truncation > 1e-6) {
    flags.push_back("TruncationWarning");
    ctx.warn("TruncationWarning: spectral-pi series tail bound " + format_double(truncation));
  }
  const auto outcome = compare_to_brute(brute, measure, static_cast<int>(ctx.count("n_perm", 199)), ctx.stream(23));
  ctx.metric("permutation_p", outcome.p, 0.0, "vs stationary exceedances off the cone K_0");
  ctx.metric("energy_distance", outcome.statistic, 0.0);
  ctx.metric("normalizer", normalizer, normalizer_se);
  ctx.write_spectral_output("spectral_pi.csv", measure, {normalizer, normalizer_se, j_max, flags});
  ctx.write_spectral_output("brute_directions.csv", unweighted(brute), {0.0, 0.0, -1, {"empirical_exceedance"}});
}

void run_series(RunContext& ctx, SeriesMode mode) {
  const Json& model = ctx.cfg().model;
  SeriesModel sm = parse_series(model["series"], mode, "model.series");
  Stream calib = ctx.stream(30);
  calibrate_truncation(sm, ctx.count("calibration_n", 2000), calib);
  Stream cstream = ctx.stream(31);
  const auto contr = contractivity_check(sm, sm.tail_index(), ctx.count("contractivity_n", 100000), cstream);
  ctx.metric("contractivity", contr.estimate, contr.se, "E[psi*(N)^p], p=" + format_double(contr.exponent));
  if (contr.heavy_moment) ctx.warn("HeavyMoment: " + contr.message);
  if (!contr.passed) ctx.warn("contractivity not established: " + contr.message);

  const std::size_t n = ctx.count("n", 100000);
  const Eigen::Index flat = static_cast<Eigen::Index>(sm.psi.combine(sm.initial, sm.innovation.sample_direction(calib)).size());
  const Matrix values = ctx.store().get_or_compute("values", [&] {
    Stream s = ctx.stream(32);
    const auto draws = sample_series(sm, n, s);
    Matrix m(flat + 1, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      m.col(static_cast<Eigen::Index>(i)).head(flat) = flatten(draws[i].value);
      m(flat, static_cast<Eigen::Index>(i)) = draws[i].truncation_warning ? 1.0 : 0.0;
    }
    return m;
  });
  const auto radii = column_norms(values.topRows(flat));
  hill_outputs(ctx, radii, "hill_alpha");
  double warnings = values.row(flat).sum();

  const std::size_t traj = ctx.count("trajectories", 100000);
  const int j_max = static_cast<int>(ctx.count("j_max", 30));
  const Matrix theta = ctx.store().get_or_compute("theta", [&] {
    Stream s = ctx.stream(33);
    SpectralSeriesResult res;
    if (mode == SeriesMode::adaptable) {
      const auto variant = model.value("index_variant", std::string("previous")) == "current" ? IndexVariant::current
                                                                                            : IndexVariant::previous;
      res = sample_theta_SM(sm, traj, j_max, s, variant);
    } else {
      ThetaROptions opts;
      opts.weighting = model.value("weighting", std::string("pooled")) == "per_trajectory" ? ThetaRWeighting::per_trajectory
                                                                                         : ThetaRWeighting::pooled;
      opts.coupled = model.value("coupled", true);
      res = sample_theta_R(sm, traj, static_cast<int>(ctx.count("k_max", 30)), j_max, s, opts);
    }
    return pack_measure(res.measure, {res.lambda_hat, res.lambda_se, res.truncation_proxy});
  });
  const double lambda = packed_stat(theta, 0), lambda_se = packed_stat(theta, 1);
  const double proxy = packed_stat(theta, 2);
  const auto measure = unpack_measure(theta, flat);
  std::vector<std::string> flags;
  if (proxy > sm.truncation.tail_tol) {
    flags.push_back("TruncationWarning");
    ctx.warn("TruncationWarning: spectral truncation proxy " + format_double(proxy));
    warnings += 1.0;
  }
  if (values.row(flat).sum() > 0.0)
    ctx.warn("TruncationWarning: " + format_double(values.row(flat).sum()) + " series draws hit max_terms");
  ctx.metric("lambda_hat", lambda, lambda_se, mode == SeriesMode::adaptable ? "estimates Lambda" : "mean trajectory mass");
  ctx.metric("truncation_warnings", warnings, 0.0);
  ctx.metric("tail_index_claimed", sm.tail_index(), 0.0);
  ctx.write_spectral_output("spectral_series.csv", measure, {lambda, lambda_se, j_max, flags});
}

std::vector<double> number_list(const Json& model, const char* key, std::vector<double> fallback) {
  if (!model.contains(key)) return fallback;
  const Vector v = parse_vector(model[key], std::string("model.") + key);
  return {v.data(), v.data() + v.size()};
}

void run_diagnostics(RunContext& ctx) {
  const Json& model = ctx.cfg().model;
  const RegVarLaw law = parse_regvar(model["law"], "model.law");
  const std::size_t n = ctx.count("n", 100000);
  const Matrix radii_m = ctx.store().get_or_compute("radii", [&] {
    Stream s = ctx.stream(40);
    Matrix m(1, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) m(0, static_cast<Eigen::Index>(i)) = sample_regvar(law, s).norm();
    return m;
  });
  const std::vector<double> radii(radii_m.data(), radii_m.data() + radii_m.size());
  hill_outputs(ctx, radii, "hill_alpha");

  const double c = ctx.size("tail_c", 2.0);
  std::vector<double> thresholds;
  const TailNormalizer a(radii);
  for (double q : {10.0, 30.0, 100.0, 300.0, 1000.0})
    if (q * 50.0 <= static_cast<double>(n) && (thresholds.empty() || a(q) > thresholds.back())) thresholds.push_back(a(q));
  if (!thresholds.empty()) {
    const auto curve = tail_ratio_check(radii, c, thresholds);
    ctx.write_curve("tail_ratio.csv", curve);
    const auto last = std::find_if(curve.points.rbegin(), curve.points.rend(), [](const auto& p) { return !p.flagged; });
    if (last != curve.points.rend())
      ctx.metric("tail_ratio", last->estimate, last->se, "at t=" + format_double(last->param) + ", c=" + format_double(c));
  }

  const auto m_grid = number_list(model, "m_grid", {2.0, 5.0, 10.0});
  const auto t_grid = number_list(model, "t_grid", {10.0, 100.0, 1000.0});
  Stream sj = ctx.stream(41);
  const auto jump = single_jump_diagnostic(law, m_grid, t_grid, n, sj);
  double worst = 0.0, worst_se = 0.0;
  for (std::size_t i = 0; i < jump.m_grid.size(); ++i) {
    ctx.write_curve("single_jump_literal_" + std::to_string(i) + ".csv", jump.literal[i]);
    ctx.write_curve("single_jump_rescaled_" + std::to_string(i) + ".csv", jump.rescaled[i]);
    const auto& p = jump.rescaled[i].points.back();
    if (!p.flagged && p.estimate >= worst) {
      worst = p.estimate;
      worst_se = p.se;
    }
  }
  ctx.metric("single_jump_max", worst, worst_se, "largest rescaled product mass at the largest t");

  if (model.contains("monotonicity")) {
    const Json& mj = model["monotonicity"];
    const RdeModel rde = parse_rde(mj["rde"], "model.monotonicity.rde");
    const GaugeSet k = parse_gauge(mj["gauge"], "model.monotonicity.gauge");
    std::vector<std::pair<Vector, Vector>> pairs;
    for (std::size_t i = 0; i < mj["pairs"].size(); ++i) {
      const std::string at = "model.monotonicity.pairs[" + std::to_string(i) + "]";
      pairs.emplace_back(parse_vector(mj["pairs"][i].at(0), at), parse_vector(mj["pairs"][i].at(1), at));
    }
    const auto r_grid = number_list(mj, "r_grid", {0.5, 1.0, 2.0, 4.0});
    Stream ms = ctx.stream(42);
    const auto rep = rde_monotonicity_check(rde, k, pairs, r_grid, ctx.count("mono_n", 100000), ms);
    ctx.metric("monotonicity_violations", static_cast<double>(rep.violations()), 0.0);
    std::ostringstream csv;
    csv << std::setprecision(17) << "pair,r,p_x,p_y,se,violation\n";
    for (const auto& cell : rep.cells)
      csv << cell.pair << ',' << cell.r << ',' << cell.p_x << ',' << cell.p_y << ',' << cell.se << ','
          << (cell.violation ? 1 : 0) << '\n';
    ctx.write("monotonicity.csv", csv.str());
  }

  if (model.contains("drift")) {
    const Json& dj = model["drift"];
    const RdeModel rde = parse_rde(dj["rde"], "model.drift.rde");
    std::vector<Vector> grid;
    for (std::size_t i = 0; i < dj["grid"].size(); ++i)
      grid.push_back(parse_vector(dj["grid"][i], "model.drift.grid[" + std::to_string(i) + "]"));
    const double power = dj.value("power", 1.0);
    const auto v = [power](const Vector& x) { return 1.0 + std::pow(x.norm(), power); };
    Stream ds = ctx.stream(43);
    const auto rep = drift_fit(rde.as_markov(), v, grid, ctx.count("drift_rep", 2000), ds);
    ctx.metric("drift_gamma", rep.gamma_hat, 0.0, "kappa=" + format_double(rep.kappa_hat));
    if (!ctx.cfg().minorization_asserted)
      ctx.warn("drift condition checked numerically only; minorization is not asserted, so geometric ergodicity is not "
               "established");
    std::ostringstream csv;
    csv << std::setprecision(17) << "v,mean_next,se\n";
    for (std::size_t i = 0; i < rep.v_values.size(); ++i)
      csv << rep.v_values[i] << ',' << rep.mean_next[i] << ',' << rep.se[i] << '\n';
    ctx.write("drift.csv", csv.str());
  }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (options.threads > 0) set_thread_count(options.threads);
  const fs::path dir = resolve_output_dir(config, options);
  const std::string canonical = config.raw.dump();
  RunReport report;
  report.kind = config.kind;
  report.config_hash = sha1_hex(canonical);
  report.input_hash = git_blob_hash(canonical);
  report.seed = config.seed;
  report.streams = config.streams;

  ArtifactStore store(dir, report.config_hash, options.resume && !options.restart);
  RunContext ctx(config, store, report);
  auto finish = [&] {
    for (const auto& [name, tol] : config.tolerances) {
      if (report.find(name)) continue;
      MetricRow row;
      row.name = name;
      row.estimate = std::nan("");
      row.se = std::nan("");
      row.tolerance = tol;
      row.pass = false;
      row.note = "not computed for this model";
      report.metrics.push_back(row);
    }
    for (const auto& [rel, hash] : output_hashes(dir.string()))
      if (rel != "report.json" && rel != "manifest.json") report.outputs[rel] = hash;
    write_file_atomic((dir / "report.json").string(), report.to_json().dump(2) + "\n");
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const Json timing{{"wall_seconds", report.wall_seconds}, {"threads", thread_count()}, {"reused_artifacts", store.reused()}};
    write_file_atomic((dir / "timing.json").string(), timing.dump(2) + "\n");
  };
  try {
    if (config.kind == "rde-stationary") {
      run_rde_stationary(ctx);
    } else if (config.kind == "tail-chain") {
      run_tail_chain(ctx);
    } else if (config.kind == "spectral-xn") {
      run_spectral_xn(ctx);
    } else if (config.kind == "spectral-pi") {
      run_spectral_pi(ctx);
    } else if (config.kind == "series-adaptable") {
      run_series(ctx, SeriesMode::adaptable);
    } else if (config.kind == "series-predictable") {
      run_series(ctx, SeriesMode::predictable);
    } else {
      run_diagnostics(ctx);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    report.error = config.kind + " run failed: " + e.what();
    finish();
    throw RunError(report.error);
  }
  finish();
  store.mark_complete();
  return report;
}

}  // namespace rvlab
