#include "rvlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rvlab/errors.hpp"

namespace rvlab {

TailNormalizer::TailNormalizer(std::vector<double> magnitudes) : sorted_(std::move(magnitudes)) {
  if (sorted_.empty()) throw std::domain_error("tail normalizer needs at least one sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double TailNormalizer::operator()(double t) const {
  if (!(t > 1.0)) throw std::domain_error("tail normalizer requires t > 1");
  const std::size_t n = sorted_.size();
  const auto above = static_cast<std::size_t>(std::floor(static_cast<double>(n) / t));
  // (above + 1)-th largest value.
  return sorted_[n - 1 - std::min(above, n - 1)];
}

int default_hill_k(std::size_t n) {
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
}

HillResult hill(std::span<const double> magnitudes, int k) {
  const std::size_t n = magnitudes.size();
  if (k < 1 || static_cast<std::size_t>(k) + 1 > n)
    throw std::domain_error("Hill order statistic count out of range");
  std::vector<double> top(magnitudes.begin(), magnitudes.end());
  std::nth_element(top.begin(), top.begin() + k, top.end(), std::greater<>());
  const double threshold = top[static_cast<std::size_t>(k)];
  if (!(threshold > 0.0)) throw DegenerateSample("Hill threshold order statistic is not positive");
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += std::log(top[static_cast<std::size_t>(i)] / threshold);
  if (!(sum > 0.0)) throw DegenerateSample("Hill log-spacings are all zero");
  HillResult r;
  r.k = k;
  r.alpha_hat = static_cast<double>(k) / sum;
  r.se = r.alpha_hat / std::sqrt(static_cast<double>(k));
  return r;
}

namespace {

void require_increasing(std::span<const double> grid, const char* what) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::domain_error(std::string(what) + " must be strictly increasing");
}

}  // namespace

void DiagnosticCurve::write_csv(std::ostream& out) const {
  out << "param,estimate,se\n";
  out.precision(17);
  for (const auto& p : points) {
    out << p.param << ',';
    if (p.flagged) {
      out << "nan,nan\n";
    } else {
      out << p.estimate << ',' << p.se << '\n';
    }
  }
}

void DiagnosticCurve::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_csv(out);
}

DiagnosticCurve hill_sweep(std::span<const double> magnitudes, std::span<const int> k_grid) {
  std::vector<double> params(k_grid.begin(), k_grid.end());
  require_increasing(params, "Hill k grid");
  DiagnosticCurve curve;
  for (int k : k_grid) {
    DiagnosticPoint p;
    p.param = k;
    try {
      const auto h = hill(magnitudes, k);
      p.estimate = h.alpha_hat;
      p.se = h.se;
    } catch (const std::exception&) {
      p.flagged = true;
      p.estimate = p.se = std::numeric_limits<double>::quiet_NaN();
    }
    curve.points.push_back(p);
  }
  return curve;
}

DiagnosticCurve tail_ratio_check(std::span<const double> magnitudes, double c,
                                 std::span<const double> t_grid, int min_exceedances) {
  if (!(c > 0.0)) throw std::domain_error("tail ratio scale must be positive");
  require_increasing(t_grid, "tail ratio grid");
  std::vector<double> sorted(magnitudes.begin(), magnitudes.end());
  std::sort(sorted.begin(), sorted.end());
  auto count_above = [&](double x) {
    return static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x));
  };
  DiagnosticCurve curve;
  for (double t : t_grid) {
    DiagnosticPoint p;
    p.param = t;
    const double n_t = count_above(t);
    const double n_ct = c == 1.0 ? n_t : count_above(c * t);
    if (n_t < min_exceedances || n_t == 0.0) {
      p.flagged = true;
      p.estimate = p.se = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double r = n_ct / n_t;
      p.estimate = r;
      if (r <= 1.0) {
        p.se = std::sqrt(r * (1.0 - r) / n_t);
      } else {
        // Roles swap for c < 1: 1/r is the binomial proportion among the n_ct.
        const double q = 1.0 / r;
        p.se = r * r * std::sqrt(q * (1.0 - q) / n_ct);
      }
    }
    curve.points.push_back(p);
  }
  return curve;
}

void EmpiricalAngularMeasure::validate(double tolerance) const {
  if (static_cast<std::size_t>(directions.cols()) != weights.size())
    throw std::logic_error("angular measure atoms and weights differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw std::logic_error("angular measure weight is negative");
    total += weights[i];
    if (std::abs(directions.col(static_cast<Eigen::Index>(i)).norm() - 1.0) > tolerance)
      throw std::logic_error("angular measure atom is not a unit vector");
  }
  if (std::abs(total - 1.0) > tolerance) throw std::logic_error("angular measure weights do not sum to 1");
}

Matrix EmpiricalAngularMeasure::resample(std::size_t m, RandomSource& rng) const {
  if (weights.empty()) throw std::domain_error("cannot resample an empty angular measure");
  std::vector<double> cumulative(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  Matrix out(directions.rows(), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const double u = (1.0 - rng.uniform()) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    out.col(static_cast<Eigen::Index>(j)) = directions.col(it - cumulative.begin());
  }
  return out;
}

void EmpiricalAngularMeasure::write_csv(std::ostream& out) const {
  out << 'w';
  for (int i = 0; i < dim(); ++i) out << ",dir_" << i;
  out << '\n';
  out.precision(17);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    out << weights[j];
    for (int i = 0; i < dim(); ++i) out << ',' << directions(i, static_cast<Eigen::Index>(j));
    out << '\n';
  }
}

EmpiricalAngularMeasure empirical_angular(const Matrix& vectors, int k) {
  if (k < 1) throw std::domain_error("angular estimator needs k >= 1");
  std::vector<std::pair<double, Eigen::Index>> ranked;
  ranked.reserve(static_cast<std::size_t>(vectors.cols()));
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const double n = vectors.col(j).norm();
    if (n > 0.0) ranked.emplace_back(n, j);
  }
  if (ranked.size() < static_cast<std::size_t>(k))
    throw std::domain_error("fewer than k nonzero vectors for angular estimation");
  std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  EmpiricalAngularMeasure m;
  m.source = EmpiricalAngularMeasure::Source::empirical_exceedance;
  m.directions.resize(vectors.rows(), k);
  m.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  for (int i = 0; i < k; ++i) m.directions.col(i) = vectors.col(ranked[static_cast<std::size_t>(i)].second) / ranked[static_cast<std::size_t>(i)].first;
  return m;
}

EmpiricalAngularMeasure empirical_angular(const std::vector<Vector>& vectors, int k) {
  if (vectors.empty()) throw std::domain_error("fewer than k nonzero vectors for angular estimation");
  Matrix stacked(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) stacked.col(static_cast<Eigen::Index>(j)) = vectors[j];
  return empirical_angular(stacked, k);
}

namespace {

double weighted_mean_distance(const Matrix& x, const std::vector<double>& wx, const Matrix& y,
                              const std::vector<double>& wy) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) row += wy[static_cast<std::size_t>(j)] * (x.col(i) - y.col(j)).norm();
    sum += wx[static_cast<std::size_t>(i)] * row;
  }
  return sum;
}

}  // namespace

double energy_distance(const EmpiricalAngularMeasure& a, const EmpiricalAngularMeasure& b) {
  if (a.size() == 0 || b.size() == 0) throw std::domain_error("energy distance needs nonempty measures");
  if (a.dim() != b.dim()) throw std::domain_error("energy distance dimension mismatch");
  const double ab = weighted_mean_distance(a.directions, a.weights, b.directions, b.weights);
  const double aa = weighted_mean_distance(a.directions, a.weights, a.directions, a.weights);
  const double bb = weighted_mean_distance(b.directions, b.weights, b.directions, b.weights);
  return std::max(0.0, 2.0 * ab - aa - bb);
}

namespace {

// Pairwise distances of the pooled sample, kept in single precision.
class PooledDistances {
 public:
  explicit PooledDistances(const Matrix& pooled) : n_(pooled.cols()), d_(static_cast<std::size_t>(n_ * n_)) {
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        const auto v = static_cast<float>((pooled.col(i) - pooled.col(j)).norm());
        d_[static_cast<std::size_t>(i * n_ + j)] = v;
        d_[static_cast<std::size_t>(j * n_ + i)] = v;
      }
    }
  }
  double operator()(Eigen::Index i, Eigen::Index j) const { return d_[static_cast<std::size_t>(i * n_ + j)]; }

 private:
  Eigen::Index n_;
  std::vector<float> d_;
};

double block_sum(const PooledDistances& d, const std::vector<Eigen::Index>& idx, std::size_t begin,
                 std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = i + 1; j < end; ++j) s += d(idx[i], idx[j]);
  return 2.0 * s;
}

}  // namespace

PermutationResult permutation_test(const Matrix& a, const Matrix& b, int n_perm, RandomSource& rng) {
  if (a.cols() == 0 || b.cols() == 0) throw std::domain_error("permutation test needs nonempty samples");
  if (a.rows() != b.rows()) throw std::domain_error("permutation test dimension mismatch");
  if (n_perm < 1) throw std::domain_error("permutation count must be positive");
  const Eigen::Index na = a.cols();
  const Eigen::Index nb = b.cols();
  Matrix pooled(a.rows(), na + nb);
  pooled << a, b;
  const PooledDistances d(pooled);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(na + nb));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const double total = block_sum(d, idx, 0, idx.size());
  const auto split = static_cast<std::size_t>(na);
  auto statistic = [&]() {
    const double s_aa = block_sum(d, idx, 0, split);
    const double s_bb = block_sum(d, idx, split, idx.size());
    const double s_ab = 0.5 * (total - s_aa - s_bb);
    const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
    return 2.0 * s_ab / (fa * fb) - s_aa / (fa * fa) - s_bb / (fb * fb);
  };
  PermutationResult r;
  r.n_perm = n_perm;
  r.statistic = statistic();
  // Relative slack absorbs summation-order round-off between equal statistics.
  const double threshold = r.statistic - 1e-9 * std::max(1.0, std::abs(r.statistic));
  int at_least = 0;
  for (int p = 0; p < n_perm; ++p) {
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
    if (statistic() >= threshold) ++at_least;
  }
  r.p_value = (1.0 + at_least) / (1.0 + n_perm);
  return r;
}

SingleJumpDiagnostic single_jump_diagnostic(const RegVarLaw& law, std::span<const double> m_grid,
                                            std::span<const double> t_grid, std::size_t n,
                                            RandomSource& rng) {
  return single_jump_diagnostic([&law](RandomSource& r) { return sample_regvar(law, r).norm(); },
                                m_grid, t_grid, n, rng);
}

SingleJumpDiagnostic single_jump_diagnostic(const std::function<double(RandomSource&)>& norm_sampler,
                                            std::span<const double> m_grid,
                                            std::span<const double> t_grid, std::size_t n,
                                            RandomSource& rng) {
  if (m_grid.empty() || t_grid.empty()) throw std::domain_error("single jump grids must be nonempty");
  if (n == 0) throw std::domain_error("single jump diagnostic needs draws");
  require_increasing(t_grid, "single jump t grid");
  std::vector<double> r1(n), r2(n), all;
  all.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    r1[i] = norm_sampler(rng);
    r2[i] = norm_sampler(rng);
    all.push_back(r1[i]);
    all.push_back(r2[i]);
  }
  const TailNormalizer a(all);
  const double dn = static_cast<double>(n);
  auto product_count = [&](double level, double lo, double hi) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (r1[i] > lo && r1[i] < hi && r1[i] * r2[i] > level) c += 1.0;
    return c;
  };
  auto tail_count = [&](double level) {
    const auto& s = a.sorted();
    return static_cast<double>(s.end() - std::upper_bound(s.begin(), s.end(), level));
  };
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  SingleJumpDiagnostic out;
  out.m_grid.assign(m_grid.begin(), m_grid.end());
  for (double m : m_grid) {
    DiagnosticCurve literal, rescaled;
    for (double t : t_grid) {
      const double num = product_count(t, m, t / m);
      const double den = tail_count(t);
      DiagnosticPoint p{t, num == 0.0 ? 0.0 : nan, nan, true};
      if (den > 0.0) {
        // Numerator proportion over n pairs, denominator over the 2n single draws.
        const double ratio = (num / dn) / (den / (2.0 * dn));
        p.estimate = ratio;
        p.se = num > 0.0 ? ratio * std::sqrt(1.0 / num + 1.0 / den) : 2.0 / den;
        p.flagged = false;
      }
      literal.points.push_back(p);

      DiagnosticPoint q{t, nan, nan, true};
      if (t > 1.0) {
        const double level = a(t) * a(t);
        const double c = product_count(level, m, level / m);
        q.estimate = t * c / dn;
        q.se = t * std::sqrt(std::max(c, 1.0)) / dn;
        q.flagged = false;
      }
      rescaled.points.push_back(q);
    }
    out.literal.push_back(std::move(literal));
    out.rescaled.push_back(std::move(rescaled));
  }
  return out;
}

}  // namespace rvlab
