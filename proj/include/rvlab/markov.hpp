#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rvlab/random.hpp"
#include "rvlab/rv_core.hpp"

namespace rvlab {

// Time-homogeneous kernel realized as a seeded step function.
struct MarkovModel {
  using Step = std::function<Vector(const Vector&, RandomSource&)>;

  int dim = 0;
  Step step;
  std::string descriptor;
};

// Law of a random d x d coefficient matrix.
class MatrixLaw {
 public:
  enum class Kind { constant, scalar_uniform, scalar_choice, lower_triangular, scaled_rotation };

  static MatrixLaw constant(Matrix value);
  static MatrixLaw scalar_uniform(double lo, double hi);
  // Equiprobable choice among scalar values.
  static MatrixLaw scalar_choice(std::vector<double> values);
  // [[lambda, 0], [c, mu]] with independent uniform entries; e1 is then an
  // eigenvector of A^T with eigenvalue lambda.
  static MatrixLaw lower_triangular(std::pair<double, double> lambda, std::pair<double, double> c,
                                    std::pair<double, double> mu);
  // s * rotation by a uniform angle (2 x 2).
  static MatrixLaw scaled_rotation(double s);

  Matrix sample(RandomSource& rng) const;
  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  std::string describe() const;

 private:
  MatrixLaw() = default;
  Kind kind_ = Kind::constant;
  int dim_ = 1;
  Matrix value_;
  std::vector<double> params_;
};

// Law of the additive term B: either deterministic or regularly varying.
class VectorLaw {
 public:
  static VectorLaw constant(Vector value);
  static VectorLaw regvar(RegVarLaw law);

  Vector sample(RandomSource& rng) const;
  int dim() const;
  const std::optional<RegVarLaw>& heavy() const { return heavy_; }
  std::string describe() const;

 private:
  VectorLaw() = default;
  Vector value_;
  std::optional<RegVarLaw> heavy_;
};

// Random difference equation Y_{n+1} = A_n Y_n + B_n with iid (A_n, B_n).
struct RdeModel {
  int dim = 1;
  MatrixLaw a_law;
  VectorLaw b_law;
  std::optional<Vector> y0;

  RdeModel(MatrixLaw a, VectorLaw b, std::optional<Vector> y0 = std::nullopt);
  std::pair<Matrix, Vector> draw(RandomSource& rng) const;
  MarkovModel as_markov() const;
  std::string describe() const;
};

struct EigenvectorCheck {
  double max_residual = 0.0;  // max |A^T y0 - lambda y0| / |y0|
  double min_eigenvalue = 0.0;
  bool holds(double tolerance = 1e-9) const { return max_residual <= tolerance && min_eigenvalue >= 0.0; }
};

// Checks that y0 is an eigenvector of A^T with nonnegative eigenvalue on n draws.
EigenvectorCheck check_eigenvector(const RdeModel& model, std::size_t n, RandomSource& rng);

Vector rde_step(const RdeModel& model, const Vector& y, RandomSource& rng);

std::vector<Vector> simulate_path(const MarkovModel& model, const Vector& x0, std::size_t n_steps,
                                  RandomSource& rng);

struct StationarySampler {
  MarkovModel model;
  std::size_t burn_in = 1000;
  std::size_t spacing = 10;
  Vector x0;
};

// n states of one long chain, collected after burn_in and every spacing steps.
std::vector<Vector> stationary_samples(const StationarySampler& sampler, std::size_t n,
                                       RandomSource& rng);

struct DriftReport {
  double gamma_hat = 0.0;
  double kappa_hat = 0.0;
  std::vector<Vector> grid;
  std::vector<double> v_values;
  std::vector<double> mean_next;
  std::vector<double> se;
  bool satisfied = false;
};

// Conservative fit of E[V(X_1^x)] <= gamma V(x) + kappa over a grid of states.
DriftReport drift_fit(const MarkovModel& model, const std::function<double(const Vector&)>& v,
                      const std::vector<Vector>& grid, std::size_t n_rep, RandomSource& rng);

struct MonotonicityCell {
  std::size_t pair = 0;
  double r = 0.0;
  double p_x = 0.0;  // P(x, r K^c), x the pair member with smaller gauge
  double p_y = 0.0;
  double se = 0.0;   // s.e. of p_y - p_x under common random numbers
  bool violation = false;
};

struct MonotonicityReport {
  std::vector<MonotonicityCell> cells;
  std::size_t violations() const;
};

// Monte Carlo check of P(y, rK^c) <= P(x, rK^c) whenever rho(x) < rho(y).
MonotonicityReport rde_monotonicity_check(const RdeModel& model, const GaugeSet& k,
                                          const std::vector<std::pair<Vector, Vector>>& pairs,
                                          const std::vector<double>& r_grid, std::size_t n,
                                          RandomSource& rng);

// Truncated series sum_{k < n_terms} A_1 ... A_k B_{k+1}.
Vector rde_series_sample(const RdeModel& model, std::size_t n_terms, RandomSource& rng);

// Empirical comparability ratio P[|X_1^x| > t] / P[|X_1^{x_ref}| > t].
struct ComparabilityEstimate {
  double ratio = 0.0;
  double se = 0.0;
};
ComparabilityEstimate estimate_comparability(const MarkovModel& model, const Vector& x,
                                             const Vector& x_ref, double t, std::size_t n,
                                             RandomSource& rng);

}  // namespace rvlab
