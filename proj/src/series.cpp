#include "rvlab/series.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "rvlab/errors.hpp"
#include "rvlab/parallel.hpp"

namespace rvlab {

double element_norm(const Element& x) { return x.norm(); }

double operator_norm(const Element& x) {
  if (x.size() == 0) return 0.0;
  if (x.size() == 1) return std::abs(x(0, 0));
  if (x.rows() == 1 || x.cols() == 1) return x.norm();
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues()(0);
}

Vector flatten(const Element& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

namespace {

Element product(const Element& a, const Element& b) { return a * b; }

void require_shape(const Element& x, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (x.rows() != rows || x.cols() != cols) {
    std::ostringstream msg;
    msg << what << " has shape " << x.rows() << "x" << x.cols() << ", expected " << rows << "x" << cols;
    throw std::invalid_argument(msg.str());
  }
}

struct Welford {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double se() const {
    return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  }
};

}  // namespace

PsiModel bilinear_scalar(double c) {
  PsiModel pm;
  pm.psi = [c](const Element& m, const Element& n) -> Element {
    require_shape(m, 1, 1, "scalar coefficient");
    require_shape(n, 1, 1, "scalar innovation");
    return c * (m * n);
  };
  pm.chi = pm.psi;
  pm.zeta = pm.psi;
  pm.combine = product;
  pm.psi_star = [c](const Element& n) { return std::abs(c) * std::abs(n(0, 0)); };
  pm.c_bound = std::abs(c);
  std::ostringstream out;
  out << "bilinear-scalar(c=" << c << ")";
  pm.descriptor = out.str();
  return pm;
}

PsiModel matrix_bilinear(double c) {
  PsiModel pm;
  pm.psi = [c](const Element& m, const Element& n) -> Element {
    if (m.cols() != n.rows()) throw std::invalid_argument("matrix coefficient and innovation do not conform");
    return c * (m * n);
  };
  pm.chi = pm.psi;
  pm.zeta = pm.psi;
  pm.combine = product;
  pm.psi_star = [c](const Element& n) { return std::abs(c) * operator_norm(n); };
  pm.c_bound = std::abs(c);
  std::ostringstream out;
  out << "matrix-bilinear(c=" << c << ")";
  pm.descriptor = out.str();
  return pm;
}

PsiModel rde_pair(int d) {
  if (d < 1) throw std::domain_error("pair dimension must be positive");
  PsiModel pm;
  auto light = [d](const Element& h, const Element& n) -> Element {
    require_shape(n, d, d + 1, "pair innovation");
    return h * n.leftCols(d);
  };
  pm.psi = light;
  pm.chi = light;
  pm.zeta = light;
  pm.combine = [d](const Element& h, const Element& n) -> Element {
    require_shape(n, d, d + 1, "pair innovation");
    return h * n.col(d);
  };
  pm.psi_star = [d](const Element& n) { return operator_norm(n.leftCols(d)); };
  pm.c_bound = 1.0;
  pm.descriptor = "rde-pair(d=" + std::to_string(d) + ")";
  return pm;
}

InnovationLaw innovation_from_regvar(const RegVarLaw& law, int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols != law.dim())
    throw std::invalid_argument("innovation shape does not match the law's dimension");
  InnovationLaw in;
  in.rows = rows;
  in.cols = cols;
  in.alpha = law.alpha;
  in.sample = [law, rows, cols](RandomSource& rng) -> Element {
    return Eigen::Map<const Matrix>(sample_regvar(law, rng).data(), rows, cols);
  };
  in.sample_direction = [angular = law.angular, rows, cols](RandomSource& rng) -> Element {
    return Eigen::Map<const Matrix>(angular.sample(rng).data(), rows, cols);
  };
  std::ostringstream out;
  out << "regvar(alpha=" << law.alpha << "," << law.angular.describe() << ",scale=" << law.scale << ",shape="
      << rows << "x" << cols << ")";
  in.descriptor = out.str();
  return in;
}

InnovationLaw diagonal_innovation(const RegVarLaw& law) {
  const int d = law.dim();
  InnovationLaw in;
  in.rows = d;
  in.cols = d;
  in.alpha = law.alpha;
  in.sample = [law](RandomSource& rng) -> Element { return sample_regvar(law, rng).asDiagonal(); };
  in.sample_direction = [angular = law.angular](RandomSource& rng) -> Element {
    return angular.sample(rng).asDiagonal();
  };
  std::ostringstream out;
  out << "diagonal(alpha=" << law.alpha << "," << law.angular.describe() << ",scale=" << law.scale << ")";
  in.descriptor = out.str();
  return in;
}

InnovationLaw rde_pair_innovation(MatrixLaw a, const RegVarLaw& b) {
  const int d = b.dim();
  if (a.dim() != d) throw std::invalid_argument("pair innovation dimensions differ");
  InnovationLaw in;
  in.rows = d;
  in.cols = d + 1;
  in.alpha = b.alpha;
  in.descriptor = "pair(A=" + a.describe() + ",B=regvar(alpha=" + std::to_string(b.alpha) + "," +
                  b.angular.describe() + "))";
  in.sample = [a = std::move(a), b, d](RandomSource& rng) -> Element {
    Element n(d, d + 1);
    n.leftCols(d) = a.sample(rng);
    n.col(d) = sample_regvar(b, rng);
    return n;
  };
  in.sample_direction = [angular = b.angular, d](RandomSource& rng) -> Element {
    Element n = Element::Zero(d, d + 1);
    n.col(d) = angular.sample(rng);
    return n;
  };
  return in;
}

InnovationLaw constant_innovation(Element n0, double alpha) {
  const double norm = element_norm(n0);
  if (!(norm > 0.0)) throw std::invalid_argument("constant innovation must be nonzero");
  InnovationLaw in;
  in.rows = static_cast<int>(n0.rows());
  in.cols = static_cast<int>(n0.cols());
  in.alpha = alpha;
  Element direction = n0 / norm;
  in.sample = [n0](RandomSource&) { return n0; };
  in.sample_direction = [direction](RandomSource&) { return direction; };
  in.descriptor = "const(shape=" + std::to_string(in.rows) + "x" + std::to_string(in.cols) + ")";
  return in;
}

SeriesModel::SeriesModel(SeriesMode mode_, PsiModel psi_, InnovationLaw innovation_, Element initial_,
                         Truncation truncation_)
    : mode(mode_), psi(std::move(psi_)), innovation(std::move(innovation_)), initial(std::move(initial_)),
      truncation(truncation_) {
  if (truncation.max_terms < 1) throw std::domain_error("max_terms must be at least 1");
  if (!(truncation.tail_tol > 0.0)) throw std::domain_error("tail_tol must be positive");
  if (!psi.psi || !psi.chi || !psi.zeta || !psi.combine || !psi.psi_star)
    throw std::invalid_argument("psi model is incomplete");
  if (!innovation.sample || !innovation.sample_direction) throw std::invalid_argument("innovation law is incomplete");
}

double SeriesModel::tail_index() const {
  return mode == SeriesMode::adaptable ? innovation.alpha / 2.0 : innovation.alpha;
}

std::string SeriesModel::describe() const {
  std::ostringstream out;
  out << (mode == SeriesMode::adaptable ? "adaptable" : "predictable") << "(psi=" << psi.descriptor
      << ",innovation=" << innovation.descriptor << ",max_terms=" << truncation.max_terms
      << ",tail_tol=" << truncation.tail_tol << ")";
  return out.str();
}

void calibrate_truncation(SeriesModel& model, std::size_t n, RandomSource& rng) {
  if (n < 100) throw std::domain_error("truncation calibration needs at least 100 draws");
  std::vector<double> totals(n);
  for (auto& total : totals) {
    double sum = 0.0;
    double prod = 1.0;
    for (int j = 0; j < model.truncation.max_terms && prod > 0.0; ++j) {
      const Element nj = model.innovation.sample(rng);
      sum += prod * element_norm(nj);
      prod *= model.psi.psi_star(nj);
      if (prod < 1e-17 * sum) break;
    }
    total = sum;
  }
  const auto q = totals.begin() + static_cast<std::ptrdiff_t>(0.99 * static_cast<double>(n - 1));
  std::nth_element(totals.begin(), q, totals.end());
  model.truncation.remainder_scale = *q;
}

namespace {

SeriesDraw sum_series(const SeriesModel& model, RandomSource& rng, bool adaptable) {
  const auto& pm = model.psi;
  const auto& tr = model.truncation;
  SeriesDraw draw;
  Element coef = model.initial;
  for (int j = 1; j <= tr.max_terms; ++j) {
    const Element n = model.innovation.sample(rng);
    Element term;
    if (adaptable) {
      coef = pm.psi(coef, n);
      term = pm.combine(coef, n);
    } else {
      term = pm.combine(coef, n);
      coef = pm.psi(coef, n);
    }
    if (j == 1) {
      draw.value = term;
    } else {
      draw.value += term;
    }
    draw.n_terms = j;
    draw.remainder_bound = element_norm(coef) * tr.remainder_scale;
    if (draw.remainder_bound < tr.tail_tol) return draw;
  }
  draw.truncation_warning = true;
  return draw;
}

}  // namespace

SeriesDraw sample_S_adaptable(const SeriesModel& model, RandomSource& rng) {
  if (model.mode != SeriesMode::adaptable) throw PreconditionError("sample_S_adaptable needs an adaptable model");
  return sum_series(model, rng, true);
}

SeriesDraw sample_R_predictable(const SeriesModel& model, RandomSource& rng) {
  if (model.mode != SeriesMode::predictable)
    throw PreconditionError("sample_R_predictable needs a predictable model");
  return sum_series(model, rng, false);
}

std::vector<SeriesDraw> sample_series(const SeriesModel& model, std::size_t n, Stream& rng) {
  const Stream root = rng.fork();
  const bool adaptable = model.mode == SeriesMode::adaptable;
  std::vector<SeriesDraw> draws(n);
  parallel_for(n, [&](std::size_t i) {
    Stream s = root.split(i);
    draws[i] = sum_series(model, s, adaptable);
  });
  return draws;
}

bool LimitCheckReport::passed() const {
  return std::all_of(chi_pass.begin(), chi_pass.end(), [](bool b) { return b; }) &&
         std::all_of(zeta_pass.begin(), zeta_pass.end(), [](bool b) { return b; });
}

LimitCheckReport chi_zeta_limit_check(const PsiModel& pm, const std::vector<LimitProbe>& probes,
                                      const std::vector<double>& t_grid, double tol) {
  if (t_grid.empty()) throw std::domain_error("limit check needs a t grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw std::domain_error("limit check t grid must be increasing");
  if (t_grid.back() < 1e6) throw std::domain_error("limit check needs max t >= 1e6");
  LimitCheckReport report;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& v = probes[p].coefficient;
    const auto& n = probes[p].innovation;
    const Element chi = pm.chi(v, n);
    const Element zeta = pm.zeta(v, n);
    LimitCheckRow last;
    for (double t : t_grid) {
      LimitCheckRow row;
      row.probe = p;
      row.t = t;
      row.chi_error = element_norm(pm.psi(t * v, n) / t - chi);
      row.zeta_error = element_norm(pm.psi(v, t * n) / t - zeta);
      report.rows.push_back(row);
      last = row;
    }
    report.chi_pass.push_back(last.chi_error < tol);
    report.zeta_pass.push_back(last.zeta_error < tol);
  }
  return report;
}

GrowthReport check_psi_growth(const PsiModel& pm, const std::vector<LimitProbe>& probes) {
  GrowthReport r;
  for (const auto& probe : probes) {
    const double m = element_norm(probe.coefficient);
    const double n = element_norm(probe.innovation);
    const double value = element_norm(pm.psi(probe.coefficient, probe.innovation));
    const double star = pm.psi_star(probe.innovation);
    const double cap = pm.c_bound * (n + 1.0);
    if (m > 0.0) {
      r.max_growth_ratio = std::max(r.max_growth_ratio, value / (m * cap));
      r.max_star_deficit = std::max(r.max_star_deficit, (value / m - star) / std::max(star, 1.0));
    }
    r.max_star_ratio = std::max(r.max_star_ratio, star / cap);
  }
  return r;
}

ContractivityResult contractivity_check(const SeriesModel& model, double exponent, std::size_t n,
                                        RandomSource& rng) {
  if (n < 10000) throw std::domain_error("contractivity check needs n >= 1e4");
  if (!(exponent > 0.0)) throw std::domain_error("moment exponent must be positive");
  ContractivityResult r;
  r.exponent = exponent;
  std::vector<double> stars(n);
  Welford acc;
  for (auto& s : stars) {
    s = model.psi.psi_star(model.innovation.sample(rng));
    acc.add(std::pow(s, exponent));
  }
  r.estimate = acc.mean;
  r.se = acc.se();
  std::vector<double> positive;
  for (double s : stars)
    if (s > 0.0) positive.push_back(s);
  if (positive.size() > 20) {
    try {
      const auto h = hill(positive, default_hill_k(positive.size()));
      r.hill_index = h.alpha_hat;
      r.heavy_moment = h.alpha_hat <= exponent + 2.0 * h.se;
    } catch (const DegenerateSample&) {
    }
  }
  std::ostringstream msg;
  if (r.heavy_moment) {
    msg << "E[psi*(N)^" << exponent << "] appears infinite: Hill index of psi*(N) is " << r.hill_index;
  } else {
    msg << "E[psi*(N)^" << exponent << "] = " << r.estimate << " +- " << r.se;
  }
  r.message = msg.str();
  r.passed = !r.heavy_moment && r.estimate + 3.0 * r.se < 1.0;
  return r;
}

namespace {

struct WeightedAtom {
  Vector direction;
  double weight = 0.0;
  int term = 0;
};

SpectralSeriesResult assemble(const std::vector<std::vector<WeightedAtom>>& per_traj, const std::vector<double>& mass,
                              Eigen::Index dim) {
  SpectralSeriesResult r;
  r.n_trajectories = per_traj.size();
  double grand = 0.0;
  std::size_t count = 0;
  for (const auto& atoms : per_traj) {
    count += atoms.size();
    for (const auto& a : atoms) grand += a.weight;
  }
  if (!(grand > 0.0)) throw ZeroMass("all series spectral weights vanished");
  r.measure.source = EmpiricalAngularMeasure::Source::theoretical_sampler;
  r.measure.directions.resize(dim, static_cast<Eigen::Index>(count));
  Eigen::Index col = 0;
  for (const auto& atoms : per_traj) {
    for (const auto& a : atoms) {
      r.measure.directions.col(col++) = a.direction;
      r.measure.weights.push_back(a.weight / grand);
      r.atom_terms.push_back(a.term);
    }
  }
  Welford acc;
  for (double m : mass) acc.add(m);
  r.lambda_hat = acc.mean;
  r.lambda_se = acc.se();
  return r;
}

double geometric_proxy(double head, double ratio) {
  return ratio < 1.0 ? head / (1.0 - ratio) : std::numeric_limits<double>::infinity();
}

}  // namespace

SpectralSeriesResult sample_theta_SM(const SeriesModel& model, std::size_t n_traj, int j_max, Stream& rng,
                                     IndexVariant variant) {
  if (model.mode != SeriesMode::adaptable) throw PreconditionError("sample_theta_SM needs an adaptable model");
  if (j_max < 1) throw std::domain_error("J_max must be at least 1");
  if (n_traj < 1) throw std::domain_error("spectral sampler needs trajectories");
  const auto& pm = model.psi;
  const double p = model.innovation.alpha / 2.0;
  const Stream root = rng.fork();
  std::vector<std::vector<WeightedAtom>> per_traj(n_traj);
  std::vector<double> mass(n_traj), tail_head(n_traj), star_n(n_traj), star_theta(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    Stream s = root.split(i);
    Element m_prev = model.initial;
    std::vector<double> w(static_cast<std::size_t>(j_max));
    std::vector<Element> candidates(static_cast<std::size_t>(j_max));
    double total = 0.0;
    double sn = 0.0, st = 0.0;
    for (int k = 1; k <= j_max; ++k) {
      const Element theta = model.innovation.sample_direction(s);
      const Element n = model.innovation.sample(s);
      const Element m_cur = pm.psi(m_prev, n);
      const Element weighted = pm.combine(pm.zeta(m_prev, theta), theta);
      const auto idx = static_cast<std::size_t>(k - 1);
      w[idx] = std::pow(element_norm(weighted), p);
      candidates[idx] = variant == IndexVariant::previous ? weighted : pm.combine(pm.zeta(m_cur, theta), theta);
      total += w[idx];
      sn += std::pow(pm.psi_star(n), p);
      st += std::pow(pm.psi_star(theta), p);
      m_prev = m_cur;
    }
    mass[i] = total;
    tail_head[i] = std::pow(element_norm(m_prev), p);
    star_n[i] = sn / j_max;
    star_theta[i] = st / j_max;
    if (!(total > 0.0)) return;
    const double u = s.uniform() * total;
    double cumulative = 0.0;
    std::size_t pick = w.size() - 1;
    for (std::size_t k = 0; k < w.size(); ++k) {
      cumulative += w[k];
      if (u <= cumulative && w[k] > 0.0) {
        pick = k;
        break;
      }
    }
    const double norm = element_norm(candidates[pick]);
    if (norm > 0.0)
      per_traj[i].push_back({flatten(candidates[pick]) / norm, total, static_cast<int>(pick) + 1});
  });
  const Eigen::Index dim =
      pm.combine(model.initial, model.innovation.sample_direction(rng)).size();
  SpectralSeriesResult r = assemble(per_traj, mass, dim);
  r.tail_index_claimed = p;
  double head = 0.0, ratio = 0.0, theta_moment = 0.0;
  for (std::size_t i = 0; i < n_traj; ++i) {
    head += tail_head[i];
    ratio += star_n[i];
    theta_moment += star_theta[i];
  }
  const double nt = static_cast<double>(n_traj);
  r.truncation_proxy = geometric_proxy(head / nt * theta_moment / nt, ratio / nt);
  if (r.truncation_proxy > model.truncation.tail_tol) r.flags.push_back("TruncationWarning");
  return r;
}

SpectralSeriesResult sample_theta_R(const SeriesModel& model, std::size_t n_traj, int k_max, int j_max,
                                    Stream& rng, const ThetaROptions& options) {
  if (model.mode != SeriesMode::predictable) throw PreconditionError("sample_theta_R needs a predictable model");
  if (k_max < 1 || j_max < 0) throw std::domain_error("K_max must be >= 1 and J_max >= 0");
  if (n_traj < 1) throw std::domain_error("spectral sampler needs trajectories");
  const auto& pm = model.psi;
  const double alpha = model.innovation.alpha;
  const Stream root = rng.fork();
  std::vector<std::vector<WeightedAtom>> per_traj(n_traj);
  std::vector<double> mass(n_traj), tail_head(n_traj), star_n(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    Stream s = root.split(i);
    const int horizon = k_max + (options.coupled ? j_max : 0);
    std::vector<Element> n(static_cast<std::size_t>(horizon) + 1);
    for (int j = 1; j <= horizon; ++j) n[static_cast<std::size_t>(j)] = model.innovation.sample(s);
    double sn = 0.0;
    for (int j = 1; j <= horizon; ++j) sn += std::pow(pm.psi_star(n[static_cast<std::size_t>(j)]), alpha);
    star_n[i] = sn / horizon;
    Element h = model.initial;
    auto& atoms = per_traj[i];
    double total = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      const Element theta = model.innovation.sample_direction(s);
      Element gamma = pm.combine(h, theta);
      Element v = pm.zeta(h, theta);
      for (int j = 1; j <= j_max; ++j) {
        if (element_norm(v) == 0.0) break;
        const Element future = options.coupled ? n[static_cast<std::size_t>(k + j)] : model.innovation.sample(s);
        gamma += pm.combine(v, future);
        v = pm.chi(v, future);
      }
      const double norm = element_norm(gamma);
      const double g = std::pow(norm, alpha);
      if (norm > 0.0) atoms.push_back({flatten(gamma) / norm, g, k});
      total += g;
      h = pm.psi(h, n[static_cast<std::size_t>(k)]);
    }
    mass[i] = total;
    tail_head[i] = std::pow(element_norm(h), alpha);
    if (options.weighting == ThetaRWeighting::per_trajectory && total > 0.0)
      for (auto& a : atoms) a.weight /= total;
  });
  const Eigen::Index dim = pm.combine(model.initial, model.innovation.sample_direction(rng)).size();
  SpectralSeriesResult r = assemble(per_traj, mass, dim);
  r.tail_index_claimed = alpha;
  double head = 0.0, ratio = 0.0;
  for (std::size_t i = 0; i < n_traj; ++i) {
    head += tail_head[i];
    ratio += star_n[i];
  }
  const double nt = static_cast<double>(n_traj);
  r.truncation_proxy = geometric_proxy(head / nt, ratio / nt);
  if (r.truncation_proxy > model.truncation.tail_tol) r.flags.push_back("TruncationWarning");
  return r;
}

}  // namespace rvlab
