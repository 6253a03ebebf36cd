#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rvlab/random.hpp"
#include "rvlab/rv_core.hpp"

namespace rvlab {

// Empirical normalizer a(t): the (1 - 1/t)-quantile of the magnitudes, chosen so
// that exactly floor(n/t) samples (absent ties) lie strictly above a(t).
class TailNormalizer {
 public:
  explicit TailNormalizer(std::vector<double> magnitudes);
  double operator()(double t) const;
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;  // ascending
};

struct HillResult {
  int k = 0;
  double alpha_hat = 0.0;
  double se = 0.0;
};

// Hill estimator on the k largest magnitudes relative to the (k+1)-th.
HillResult hill(std::span<const double> magnitudes, int k);
// Default order statistic count floor(sqrt(n)).
int default_hill_k(std::size_t n);

struct DiagnosticPoint {
  double param = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  bool flagged = false;
};

struct DiagnosticCurve {
  std::vector<DiagnosticPoint> points;

  std::size_t size() const { return points.size(); }
  const DiagnosticPoint& operator[](std::size_t i) const { return points[i]; }
  // CSV with header `param,estimate,se`; flagged points carry nan estimates.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

DiagnosticCurve hill_sweep(std::span<const double> magnitudes, std::span<const int> k_grid);

// Empirical #{X > c t} / #{X > t} on a grid of t; points with fewer than
// min_exceedances exceedances of t are flagged.
DiagnosticCurve tail_ratio_check(std::span<const double> magnitudes, double c,
                                 std::span<const double> t_grid, int min_exceedances = 50);

// Weighted atoms on the unit sphere. Directions are stored column-wise.
struct EmpiricalAngularMeasure {
  enum class Source { empirical_exceedance, theoretical_sampler };

  Matrix directions;  // d x n
  std::vector<double> weights;
  Source source = Source::empirical_exceedance;

  int dim() const { return static_cast<int>(directions.rows()); }
  std::size_t size() const { return weights.size(); }
  // Throws std::logic_error if weights or norms break the invariants.
  void validate(double tolerance = 1e-9) const;
  // m iid draws from the atom distribution, as an unweighted d x m sample.
  Matrix resample(std::size_t m, RandomSource& rng) const;
  void write_csv(std::ostream& out) const;
};

// Directions of the k largest-norm vectors (columns of `vectors`), weight 1/k.
EmpiricalAngularMeasure empirical_angular(const Matrix& vectors, int k);
EmpiricalAngularMeasure empirical_angular(const std::vector<Vector>& vectors, int k);

// Exact energy distance between two weighted atom sets.
double energy_distance(const EmpiricalAngularMeasure& a, const EmpiricalAngularMeasure& b);

struct PermutationResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int n_perm = 0;
};

// Two-sample permutation test of the energy-distance statistic; samples are
// d x n matrices of directions.
PermutationResult permutation_test(const Matrix& a, const Matrix& b, int n_perm,
                                   RandomSource& rng);

// Single-big-jump product condition for an innovation law, evaluated by Monte
// Carlo in two normalizations: the literal ratio with denominator P[|N| > t],
// and the rescaled version t~ P[|N1||N2| > a(t~)^2, |N1| in (M, a(t~)^2 / M)].
struct SingleJumpDiagnostic {
  std::vector<double> m_grid;
  std::vector<DiagnosticCurve> literal;   // one curve per M, param = t
  std::vector<DiagnosticCurve> rescaled;  // one curve per M, param = t~
};

SingleJumpDiagnostic single_jump_diagnostic(const RegVarLaw& law, std::span<const double> m_grid,
                                            std::span<const double> t_grid, std::size_t n,
                                            RandomSource& rng);
// Same diagnostic for an arbitrary law given through a sampler of |N|.
SingleJumpDiagnostic single_jump_diagnostic(const std::function<double(RandomSource&)>& norm_sampler,
                                            std::span<const double> m_grid,
                                            std::span<const double> t_grid, std::size_t n,
                                            RandomSource& rng);

}  // namespace rvlab
