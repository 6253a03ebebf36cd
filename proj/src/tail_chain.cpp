#include "rvlab/tail_chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rvlab/errors.hpp"
#include "rvlab/parallel.hpp"

namespace rvlab {

TailLimitModel linear_tail_limits(MatrixLaw a, AngularLaw theta, double alpha) {
  if (a.dim() != theta.dim()) throw std::invalid_argument("tail chain and angular law dimensions differ");
  if (!(alpha > 0.0)) throw std::domain_error("tail index must be positive");
  TailLimitModel m;
  m.dim = a.dim();
  m.alpha = alpha;
  m.linear = true;
  m.descriptor = "linear(A=" + a.describe() + ",theta=" + theta.describe() + ")";
  m.theta_of_x = [theta](const Vector&, RandomSource& rng) { return theta.sample(rng); };
  m.r_of_x = [](const Vector&) { return 1.0; };
  m.z_step = [a = std::move(a)](const Vector& z, RandomSource& rng) -> Vector { return a.sample(rng) * z; };
  return m;
}

TailLimitModel rde_tail_limits(const RdeModel& model) {
  const auto& heavy = model.b_law.heavy();
  if (!heavy) throw PreconditionError("RDE tail limits need a regularly varying additive term");
  return linear_tail_limits(model.a_law, heavy->angular, heavy->alpha);
}

std::vector<Vector> simulate_tail_chain(const TailLimitModel& model, const Vector& z0, std::size_t n,
                                        RandomSource& rng) {
  std::vector<Vector> path;
  path.reserve(n + 1);
  path.push_back(z0);
  for (std::size_t k = 0; k < n; ++k) path.push_back(model.z_step(path.back(), rng));
  return path;
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, n > 1.0 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

// True when the Hill index of the sample does not clear `exponent`.
bool moment_diverges(const std::vector<double>& sample, double exponent, double* index_out) {
  std::vector<double> positive;
  positive.reserve(sample.size());
  for (double v : sample)
    if (v > 0.0) positive.push_back(v);
  if (positive.size() < 20) return false;
  try {
    const auto h = hill(positive, default_hill_k(positive.size()));
    if (index_out) *index_out = h.alpha_hat;
    return h.alpha_hat <= exponent + 2.0 * h.se;
  } catch (const DegenerateSample&) {
    return false;
  }
}

}  // namespace

RhoStarEstimate estimate_rho_star(const TailLimitModel& model, int n_directions, std::size_t n_rep,
                                  RandomSource& rng, const std::vector<Vector>& extra_directions,
                                  std::optional<double> gauge_margin) {
  if (n_directions < 0) throw std::domain_error("direction count must be nonnegative");
  if (n_rep < 2) throw std::domain_error("rho* estimate needs replications");
  std::vector<Vector> directions;
  const AngularLaw sphere = AngularLaw::uniform(model.dim);
  for (int i = 0; i < n_directions; ++i) directions.push_back(sphere.sample(rng));
  for (const auto& d : extra_directions) {
    if (d.size() != model.dim) throw std::invalid_argument("probe direction has wrong dimension");
    directions.push_back(d / d.norm());
  }
  if (directions.empty()) throw std::domain_error("rho* estimate needs at least one direction");

  RhoStarEstimate est;
  est.value = -1.0;
  est.directions_probed = static_cast<int>(directions.size());
  std::vector<double> norms(n_rep), powers(n_rep);
  for (const auto& theta : directions) {
    for (std::size_t i = 0; i < n_rep; ++i) {
      norms[i] = model.z_step(theta, rng).norm();
      powers[i] = std::pow(norms[i], model.alpha);
    }
    double index = 0.0;
    if (moment_diverges(norms, model.alpha, &index)) {
      std::ostringstream msg;
      msg << "E|Z_1^theta|^alpha appears infinite: Hill index " << index << " vs alpha " << model.alpha;
      throw HeavyMoment(msg.str(), index, model.alpha);
    }
    const auto s = mean_se(powers);
    if (s.mean > est.value) {
      est.value = s.mean;
      est.se = s.se;
      est.argmax = theta;
    }
  }
  if (gauge_margin && est.value < 1.0) {
    const double target = std::pow(*gauge_margin, model.alpha);
    int k = 1;
    double power = est.value;
    while (!(power < target) && k < 100000) {
      power *= est.value;
      ++k;
    }
    if (power < target) est.k0 = k;
  }
  return est;
}

std::size_t MomentBoundReport::exceedances() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.exceeded; }));
}

MomentBoundReport verify_z_moment_bound(const TailLimitModel& model, const RhoStarEstimate& rho,
                                        const std::vector<Vector>& theta_grid,
                                        const std::vector<int>& n_grid, std::size_t n_rep,
                                        RandomSource& rng) {
  if (n_grid.empty()) return {};
  const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
  if (*std::min_element(n_grid.begin(), n_grid.end()) < 0) throw std::domain_error("moment horizon must be nonnegative");
  MomentBoundReport report;
  for (std::size_t t = 0; t < theta_grid.size(); ++t) {
    const Vector theta = theta_grid[t] / theta_grid[t].norm();
    // samples[n][i] = |Z_n^theta|^alpha on replication i
    std::vector<std::vector<double>> samples(static_cast<std::size_t>(n_max) + 1, std::vector<double>(n_rep));
    for (std::size_t i = 0; i < n_rep; ++i) {
      Vector z = theta;
      samples[0][i] = std::pow(z.norm(), model.alpha);
      for (int n = 1; n <= n_max; ++n) {
        z = model.z_step(z, rng);
        samples[static_cast<std::size_t>(n)][i] = std::pow(z.norm(), model.alpha);
      }
    }
    for (int n : n_grid) {
      const auto s = mean_se(samples[static_cast<std::size_t>(n)]);
      MomentBoundCell c;
      c.theta_index = t;
      c.n = n;
      c.mean = s.mean;
      c.se = s.se;
      c.bound = std::pow(rho.value, n);
      // Round-off floor for norm-preserving models where the s.e. is ~0.
      const double slack = 3.0 * s.se + 1e-12 * std::max(c.bound, s.mean);
      c.exceeded = s.mean > c.bound + slack;
      report.cells.push_back(c);
    }
  }
  return report;
}

namespace {

struct Atom {
  Vector direction;
  double weight;
};

SpectralSampleResult assemble(const std::vector<std::vector<Atom>>& per_traj, int dim) {
  SpectralSampleResult r;
  r.n_trajectories = per_traj.size();
  std::size_t count = 0;
  std::vector<double> totals(per_traj.size(), 0.0);
  for (std::size_t i = 0; i < per_traj.size(); ++i) {
    count += per_traj[i].size();
    for (const auto& a : per_traj[i]) totals[i] += a.weight;
  }
  double grand = 0.0;
  for (double t : totals) grand += t;
  if (!(grand > 0.0)) throw ZeroMass("all spectral weights vanished");
  r.measure.source = EmpiricalAngularMeasure::Source::theoretical_sampler;
  r.measure.directions.resize(dim, static_cast<Eigen::Index>(count));
  r.measure.weights.reserve(count);
  Eigen::Index col = 0;
  for (const auto& atoms : per_traj) {
    for (const auto& a : atoms) {
      r.measure.directions.col(col++) = a.direction;
      r.measure.weights.push_back(a.weight / grand);
    }
  }
  const auto s = mean_se(totals);
  r.normalizer = s.mean;
  r.normalizer_se = s.se;
  return r;
}

}  // namespace

SpectralSampleResult sample_theta_n(const MarkovModel& chain, const TailLimitModel& limits,
                                    const Vector& x0, int n, std::size_t n_traj, Stream& rng,
                                    const SpectralOptions& options) {
  if (n < 1) throw std::domain_error("spectral horizon n must be at least 1");
  if (n_traj < 1) throw std::domain_error("spectral sampler needs trajectories");
  if (chain.dim != limits.dim) throw std::invalid_argument("chain and tail limits dimensions differ");
  const Stream root = rng.fork();
  std::vector<std::vector<Atom>> per_traj(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    Stream s = root.split(i);
    auto& atoms = per_traj[i];
    Vector x = x0;
    for (int j = 0; j < n; ++j) {
      if (j > 0) x = chain.step(x, s);
      if (j == 0 && !options.include_j0) continue;
      const double r = limits.r_of_x(x);
      Vector z = limits.theta_of_x(x, s);
      for (int k = 0; k < n - j - 1; ++k) z = limits.z_step(z, s);
      const double norm = z.norm();
      if (norm == 0.0 || r == 0.0) continue;
      if (options.unit_indicator && norm < 1.0) continue;
      atoms.push_back({z / norm, r * std::pow(norm, limits.alpha)});
    }
  });
  return assemble(per_traj, chain.dim);
}

SpectralSampleResult sample_theta_pi(const StationarySampler& stationary, const TailLimitModel& limits,
                                     const GaugeSet& k, const RhoStarEstimate& rho, int j_max,
                                     std::size_t n_traj, Stream& rng, ConeRestriction restriction,
                                     const SpectralOptions& options) {
  if (!rho.contractive())
    throw PreconditionError("estimate_rho_star reports rho* >= 1; the stationary spectral series does not contract");
  if (j_max < 0) throw std::domain_error("truncation J_max must be nonnegative");
  if (n_traj < 1) throw std::domain_error("spectral sampler needs trajectories");
  if (k.dim() != limits.dim) throw std::invalid_argument("gauge and tail limits dimensions differ");
  const std::vector<Vector> states = stationary_samples(stationary, n_traj, rng);
  const Stream root = rng.fork();
  std::vector<std::vector<Atom>> per_traj(n_traj);
  std::vector<double> r_values(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    Stream s = root.split(i);
    const double r = limits.r_of_x(states[i]);
    r_values[i] = r;
    Vector z = limits.theta_of_x(states[i], s);
    for (int j = 0; j <= j_max; ++j) {
      if (j > 0) z = limits.z_step(z, s);
      const double norm = z.norm();
      if (norm == 0.0 || r == 0.0) continue;
      if (options.unit_indicator && norm < 1.0) continue;
      const bool in_cone = k.in_cone(z);
      if (in_cone != (restriction == ConeRestriction::cone)) continue;
      per_traj[i].push_back({z / norm, r * std::pow(norm, limits.alpha)});
    }
  });
  SpectralSampleResult result = assemble(per_traj, limits.dim);
  result.truncation_j = j_max;
  const double sup_r = *std::max_element(r_values.begin(), r_values.end());
  result.truncation_bound = std::pow(rho.value, j_max + 1) / (1.0 - rho.value) * sup_r;
  return result;
}

double RecursionCheck::z_score() const {
  const double se = std::sqrt(direct_se * direct_se + formula_se * formula_se);
  return se > 0.0 ? (direct - formula) / se : (direct == formula ? 0.0 : std::numeric_limits<double>::infinity());
}

RecursionCheck recursion_check_n2(const MarkovModel& chain, const TailLimitModel& limits,
                                  const Vector& x0, double t, std::size_t n, RandomSource& rng) {
  if (!(t > 1.0)) throw std::domain_error("recursion check needs t > 1");
  if (n < 2) throw std::domain_error("recursion check needs samples");
  RecursionCheck c;
  c.t = t;
  // Normalizer a_t from the one-step law at the reference point.
  std::vector<double> first(n);
  for (std::size_t i = 0; i < n; ++i) first[i] = chain.step(x0, rng).norm();
  const TailNormalizer a(first);
  c.a_t = a(t);
  const double dn = static_cast<double>(n);
  const double ref_count = static_cast<double>(std::count_if(first.begin(), first.end(), [&](double v) { return v > c.a_t; }));

  double hits = 0.0;
  std::vector<double> r_first(n), z_moment(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x1 = chain.step(x0, rng);
    const Vector x2 = chain.step(x1, rng);
    if (x2.norm() > c.a_t) hits += 1.0;
    r_first[i] = limits.r_of_x(x1);
    const Vector z = limits.z_step(limits.theta_of_x(x0, rng), rng);
    z_moment[i] = std::pow(z.norm(), limits.alpha);
  }
  c.exceedances = hits;
  c.direct = t * hits / dn;
  // Binomial error of the count plus the error of a_t through the reference count.
  c.direct_se = hits > 0.0 ? c.direct * std::sqrt(1.0 / hits + 1.0 / std::max(ref_count, 1.0)) : t / dn;
  const auto r_stats = mean_se(r_first);
  const auto z_stats = mean_se(z_moment);
  const double r0 = limits.r_of_x(x0);
  c.formula = r_stats.mean + r0 * z_stats.mean;
  c.formula_se = std::sqrt(r_stats.se * r_stats.se + r0 * r0 * z_stats.se * z_stats.se);
  return c;
}

}  // namespace rvlab
