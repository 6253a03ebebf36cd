#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rvlab/random.hpp"

namespace rvlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kUnitTolerance = 1e-12;

// Pure Pareto law: P[Z > t] = t^-alpha for t >= 1.
struct ParetoLaw {
  double alpha;

  explicit ParetoLaw(double alpha);
  double survival(double t) const;
};

// Inverse-CDF draw u^(-1/alpha); u must lie in (0, 1].
double sample_pareto(const ParetoLaw& law, double u);
double sample_pareto(const ParetoLaw& law, RandomSource& rng);

// Law of a direction on the Euclidean unit sphere of R^d.
class AngularLaw {
 public:
  using Sampler = std::function<Vector(RandomSource&)>;
  enum class Kind { atoms, uniform, custom };

  static AngularLaw atoms(std::vector<Vector> directions, std::vector<double> weights);
  static AngularLaw point(Vector direction);
  static AngularLaw uniform(int dim);
  // The sampler must return unit vectors; it is trusted, not checked per draw.
  static AngularLaw custom(int dim, Sampler sampler, std::string description = "custom");

  Vector sample(RandomSource& rng) const;
  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  const std::vector<Vector>& directions() const { return directions_; }
  const std::vector<double>& weights() const { return weights_; }
  std::string describe() const;

 private:
  AngularLaw() = default;

  Kind kind_ = Kind::uniform;
  int dim_ = 0;
  std::vector<Vector> directions_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  Sampler sampler_;
  std::string description_;
};

// Regularly varying law scale * Z * Theta with Z ~ Pareto(alpha) independent of
// Theta ~ angular. The slowly varying factor is the constant scale.
struct RegVarLaw {
  double alpha;
  AngularLaw angular;
  double scale = 1.0;

  RegVarLaw(double alpha, AngularLaw angular, double scale = 1.0);
  int dim() const { return angular.dim(); }
  // Exact tail of the radius: P[|X| > t].
  double radius_survival(double t) const;
};

Vector sample_regvar(const RegVarLaw& law, RandomSource& rng);
// Deterministic composition from a radius uniform and a given direction.
Vector sample_regvar(const RegVarLaw& law, double u, const Vector& direction);

struct PolarPoint {
  double radius = 0.0;
  // Zero vector when radius == 0 (sentinel for "no direction").
  Vector direction;

  bool is_zero() const { return radius == 0.0; }
};

PolarPoint polar_decompose(const Vector& x);

// Convex closed set K with 0 in its interior; only balls and half-spaces
// {x : <x, y0> <= 1} are supported.
class GaugeSet {
 public:
  enum class Kind { ball, half_space };

  static GaugeSet ball(int dim, double radius);
  static GaugeSet half_space(Vector y0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  const Vector& normal() const { return y0_; }

  // rho_{K^c}(x) = inf{r > 0 : r x not in K}; +inf when the ray never leaves K.
  double rho_complement(const Vector& x) const;
  // Membership in K_0, the largest cone contained in K.
  bool in_cone(const Vector& x) const;
  // epsilon with rho_{K^c}(x) >= epsilon / |x| for all x.
  double margin() const;
  std::string describe() const;

 private:
  GaugeSet() = default;
  Kind kind_ = Kind::ball;
  int dim_ = 0;
  double radius_ = 1.0;
  Vector y0_;
};

double gauge_rho_complement(const GaugeSet& k, const Vector& x);
bool in_cone_K0(const GaugeSet& k, const Vector& x);

}  // namespace rvlab
