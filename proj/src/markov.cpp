#include "rvlab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rvlab/errors.hpp"

namespace rvlab {

MatrixLaw MatrixLaw::constant(Matrix value) {
  if (value.rows() != value.cols() || value.rows() < 1)
    throw std::invalid_argument("coefficient matrix must be square and nonempty");
  MatrixLaw law;
  law.kind_ = Kind::constant;
  law.dim_ = static_cast<int>(value.rows());
  law.value_ = std::move(value);
  return law;
}

MatrixLaw MatrixLaw::scalar_uniform(double lo, double hi) {
  if (!(hi >= lo)) throw std::invalid_argument("uniform coefficient range is empty");
  MatrixLaw law;
  law.kind_ = Kind::scalar_uniform;
  law.params_ = {lo, hi};
  return law;
}

MatrixLaw MatrixLaw::scalar_choice(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("coefficient choice needs values");
  MatrixLaw law;
  law.kind_ = Kind::scalar_choice;
  law.params_ = std::move(values);
  return law;
}

MatrixLaw MatrixLaw::lower_triangular(std::pair<double, double> lambda, std::pair<double, double> c,
                                      std::pair<double, double> mu) {
  for (auto [lo, hi] : {lambda, c, mu})
    if (!(hi >= lo)) throw std::invalid_argument("lower-triangular entry range is empty");
  MatrixLaw law;
  law.kind_ = Kind::lower_triangular;
  law.dim_ = 2;
  law.params_ = {lambda.first, lambda.second, c.first, c.second, mu.first, mu.second};
  return law;
}

MatrixLaw MatrixLaw::scaled_rotation(double s) {
  MatrixLaw law;
  law.kind_ = Kind::scaled_rotation;
  law.dim_ = 2;
  law.params_ = {s};
  return law;
}

Matrix MatrixLaw::sample(RandomSource& rng) const {
  switch (kind_) {
    case Kind::constant:
      return value_;
    case Kind::scalar_uniform:
      return Matrix::Constant(1, 1, params_[0] == params_[1] ? params_[0] : rng.uniform(params_[0], params_[1]));
    case Kind::scalar_choice:
      return Matrix::Constant(1, 1, params_[params_.size() == 1 ? 0 : rng.index(params_.size())]);
    case Kind::lower_triangular: {
      auto draw = [&](std::size_t i) {
        return params_[i] == params_[i + 1] ? params_[i] : rng.uniform(params_[i], params_[i + 1]);
      };
      Matrix a(2, 2);
      a(0, 0) = draw(0);
      a(0, 1) = 0.0;
      a(1, 0) = draw(2);
      a(1, 1) = draw(4);
      return a;
    }
    case Kind::scaled_rotation: {
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      Matrix a(2, 2);
      a << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
      return params_[0] * a;
    }
  }
  return {};
}

std::string MatrixLaw::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::constant:
      out << "const(" << dim_ << "x" << dim_ << ")";
      break;
    case Kind::scalar_uniform:
      out << "uniform[" << params_[0] << "," << params_[1] << "]";
      break;
    case Kind::scalar_choice:
      out << "choice(" << params_.size() << ")";
      break;
    case Kind::lower_triangular:
      out << "lower_triangular(lambda=[" << params_[0] << "," << params_[1] << "])";
      break;
    case Kind::scaled_rotation:
      out << "rotation(s=" << params_[0] << ")";
      break;
  }
  return out.str();
}

VectorLaw VectorLaw::constant(Vector value) {
  if (value.size() < 1) throw std::invalid_argument("additive term must be nonempty");
  VectorLaw law;
  law.value_ = std::move(value);
  return law;
}

VectorLaw VectorLaw::regvar(RegVarLaw heavy) {
  VectorLaw law;
  law.heavy_ = std::move(heavy);
  return law;
}

Vector VectorLaw::sample(RandomSource& rng) const {
  return heavy_ ? sample_regvar(*heavy_, rng) : value_;
}

int VectorLaw::dim() const { return heavy_ ? heavy_->dim() : static_cast<int>(value_.size()); }

std::string VectorLaw::describe() const {
  std::ostringstream out;
  if (heavy_) {
    out << "regvar(alpha=" << heavy_->alpha << "," << heavy_->angular.describe() << ",scale=" << heavy_->scale << ")";
  } else {
    out << "const(d=" << value_.size() << ")";
  }
  return out.str();
}

RdeModel::RdeModel(MatrixLaw a, VectorLaw b, std::optional<Vector> eigen)
    : dim(a.dim()), a_law(std::move(a)), b_law(std::move(b)), y0(std::move(eigen)) {
  if (b_law.dim() != dim) throw std::invalid_argument("RDE coefficient and additive term dimensions differ");
  if (y0 && y0->size() != dim) throw std::invalid_argument("RDE eigenvector has wrong dimension");
}

std::pair<Matrix, Vector> RdeModel::draw(RandomSource& rng) const {
  Matrix a = a_law.sample(rng);
  Vector b = b_law.sample(rng);
  return {std::move(a), std::move(b)};
}

MarkovModel RdeModel::as_markov() const {
  return MarkovModel{dim, [model = *this](const Vector& y, RandomSource& rng) { return rde_step(model, y, rng); },
                     describe()};
}

std::string RdeModel::describe() const { return "rde(A=" + a_law.describe() + ",B=" + b_law.describe() + ")"; }

EigenvectorCheck check_eigenvector(const RdeModel& model, std::size_t n, RandomSource& rng) {
  if (!model.y0) throw PreconditionError("RDE model has no eigenvector y0");
  const Vector& y0 = *model.y0;
  EigenvectorCheck c;
  c.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector image = model.a_law.sample(rng).transpose() * y0;
    const double lambda = image.dot(y0) / y0.dot(y0);
    c.max_residual = std::max(c.max_residual, (image - lambda * y0).norm() / y0.norm());
    c.min_eigenvalue = std::min(c.min_eigenvalue, lambda);
  }
  return c;
}

Vector rde_step(const RdeModel& model, const Vector& y, RandomSource& rng) {
  if (y.size() != model.dim) throw std::invalid_argument("RDE state has wrong dimension");
  auto [a, b] = model.draw(rng);
  return a * y + b;
}

std::vector<Vector> simulate_path(const MarkovModel& model, const Vector& x0, std::size_t n_steps,
                                  RandomSource& rng) {
  std::vector<Vector> path;
  path.reserve(n_steps + 1);
  path.push_back(x0);
  for (std::size_t k = 0; k < n_steps; ++k) path.push_back(model.step(path.back(), rng));
  return path;
}

std::vector<Vector> stationary_samples(const StationarySampler& sampler, std::size_t n, RandomSource& rng) {
  if (sampler.spacing < 1) throw std::domain_error("stationary sampler spacing must be at least 1");
  std::vector<Vector> out;
  if (n == 0) return out;
  out.reserve(n);
  Vector x = sampler.x0;
  for (std::size_t k = 0; k < sampler.burn_in; ++k) x = sampler.model.step(x, rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < sampler.spacing; ++k) x = sampler.model.step(x, rng);
    out.push_back(x);
  }
  return out;
}

DriftReport drift_fit(const MarkovModel& model, const std::function<double(const Vector&)>& v,
                      const std::vector<Vector>& grid, std::size_t n_rep, RandomSource& rng) {
  if (grid.empty()) throw std::domain_error("drift grid must be nonempty");
  if (n_rep < 2) throw std::domain_error("drift fit needs at least two replications");
  DriftReport r;
  r.grid = grid;
  for (const auto& x : grid) {
    const double vx = v(x);
    if (!std::isfinite(vx) || vx < 0.0) throw std::domain_error("drift function is not finite and nonnegative on the grid");
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n_rep; ++i) {
      const double val = v(model.step(x, rng));
      if (!std::isfinite(val)) throw std::domain_error("drift function is not finite at a sampled state");
      sum += val;
      sum_sq += val * val;
    }
    const double n = static_cast<double>(n_rep);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    r.v_values.push_back(vx);
    r.mean_next.push_back(mean);
    r.se.push_back(std::sqrt(var / n));
  }

  // Ordinary least squares of mean_next on V.
  const std::size_t m = grid.size();
  double sv = 0.0, se = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sv += r.v_values[i];
    se += r.mean_next[i];
  }
  const double mv = sv / static_cast<double>(m), me = se / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (r.v_values[i] - mv) * (r.v_values[i] - mv);
    sxy += (r.v_values[i] - mv) * (r.mean_next[i] - me);
  }
  const double gamma_ls = sxx > 0.0 ? sxy / sxx : (mv > 0.0 ? me / mv : 0.0);
  double kappa = sxx > 0.0 ? me - gamma_ls * mv : 0.0;
  kappa = std::max(kappa, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (r.v_values[i] == 0.0) kappa = std::max(kappa, r.mean_next[i] - 3.0 * r.se[i]);

  // Smallest gamma keeping every grid point within 3 s.e. of the bound.
  double gamma = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (r.v_values[i] > 0.0) gamma = std::max(gamma, (r.mean_next[i] - kappa - 3.0 * r.se[i]) / r.v_values[i]);
  r.gamma_hat = gamma;
  r.kappa_hat = kappa;
  r.satisfied = gamma < 1.0;
  return r;
}

std::size_t MonotonicityReport::violations() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.violation; }));
}

MonotonicityReport rde_monotonicity_check(const RdeModel& model, const GaugeSet& k,
                                          const std::vector<std::pair<Vector, Vector>>& pairs,
                                          const std::vector<double>& r_grid, std::size_t n,
                                          RandomSource& rng) {
  if (!model.y0) throw PreconditionError("monotonicity check requires the model eigenvector y0");
  if (k.kind() != GaugeSet::Kind::half_space) throw PreconditionError("monotonicity check requires a half-space gauge");
  if (n < 2) throw std::domain_error("monotonicity check needs at least two draws");
  MonotonicityReport report;
  const double dn = static_cast<double>(n);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [x, y] = pairs[p];
    if (!(k.rho_complement(x) < k.rho_complement(y)))
      throw std::domain_error("monotonicity pair does not satisfy rho(x) < rho(y)");
    std::vector<double> gx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto [a, b] = model.draw(rng);
      gx[i] = k.rho_complement(a * x + b);
      gy[i] = k.rho_complement(a * y + b);
    }
    for (double r : r_grid) {
      // z lies in r K^c exactly when rho_{K^c}(z) < 1/r.
      const double level = 1.0 / r;
      double cx = 0.0, cy = 0.0, sum_d = 0.0, sum_d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ix = gx[i] < level ? 1.0 : 0.0;
        const double iy = gy[i] < level ? 1.0 : 0.0;
        cx += ix;
        cy += iy;
        sum_d += iy - ix;
        sum_d2 += (iy - ix) * (iy - ix);
      }
      MonotonicityCell cell;
      cell.pair = p;
      cell.r = r;
      cell.p_x = cx / dn;
      cell.p_y = cy / dn;
      const double mean_d = sum_d / dn;
      const double var_d = std::max(0.0, (sum_d2 - dn * mean_d * mean_d) / (dn - 1.0));
      cell.se = std::sqrt(var_d / dn);
      cell.violation = mean_d > 3.0 * cell.se && mean_d > 0.0;
      report.cells.push_back(cell);
    }
  }
  return report;
}

Vector rde_series_sample(const RdeModel& model, std::size_t n_terms, RandomSource& rng) {
  if (n_terms < 1) throw std::domain_error("series needs at least one term");
  Vector sum = Vector::Zero(model.dim);
  Matrix prefix = Matrix::Identity(model.dim, model.dim);
  for (std::size_t k = 0; k < n_terms; ++k) {
    auto [a, b] = model.draw(rng);
    sum += prefix * b;
    if (k + 1 < n_terms) prefix = prefix * a;
  }
  return sum;
}

ComparabilityEstimate estimate_comparability(const MarkovModel& model, const Vector& x,
                                             const Vector& x_ref, double t, std::size_t n,
                                             RandomSource& rng) {
  double cx = 0.0, cr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.step(x, rng).norm() > t) cx += 1.0;
    if (model.step(x_ref, rng).norm() > t) cr += 1.0;
  }
  if (cr == 0.0) throw DegenerateSample("no exceedances at the reference point");
  ComparabilityEstimate e;
  e.ratio = cx / cr;
  e.se = cx > 0.0 ? e.ratio * std::sqrt(1.0 / cx + 1.0 / cr) : 1.0 / cr;
  return e;
}

}  // namespace rvlab
