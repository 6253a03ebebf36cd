#include "rvlab/rv_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rvlab {

ParetoLaw::ParetoLaw(double a) : alpha(a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("Pareto index must be positive");
}

double ParetoLaw::survival(double t) const { return t < 1.0 ? 1.0 : std::pow(t, -alpha); }

double sample_pareto(const ParetoLaw& law, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw std::domain_error("Pareto uniform must lie in (0, 1]");
  return std::pow(u, -1.0 / law.alpha);
}

double sample_pareto(const ParetoLaw& law, RandomSource& rng) {
  return sample_pareto(law, rng.uniform());
}

AngularLaw AngularLaw::atoms(std::vector<Vector> directions, std::vector<double> weights) {
  if (directions.empty()) throw std::invalid_argument("angular law needs at least one atom");
  if (directions.size() != weights.size())
    throw std::invalid_argument("angular atoms and weights differ in length");
  AngularLaw law;
  law.kind_ = Kind::atoms;
  law.dim_ = static_cast<int>(directions.front().size());
  double total = 0.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (directions[i].size() != law.dim_)
      throw std::invalid_argument("angular atoms have inconsistent dimension");
    if (std::abs(directions[i].norm() - 1.0) > kUnitTolerance)
      throw std::invalid_argument("angular atom is not a unit vector");
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("angular weight is negative");
    total += weights[i];
    law.cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > kUnitTolerance)
    throw std::invalid_argument("angular weights do not sum to 1");
  law.directions_ = std::move(directions);
  law.weights_ = std::move(weights);
  return law;
}

AngularLaw AngularLaw::point(Vector direction) {
  return atoms({std::move(direction)}, {1.0});
}

AngularLaw AngularLaw::uniform(int dim) {
  if (dim < 1) throw std::invalid_argument("angular dimension must be positive");
  AngularLaw law;
  law.kind_ = Kind::uniform;
  law.dim_ = dim;
  return law;
}

AngularLaw AngularLaw::custom(int dim, Sampler sampler, std::string description) {
  if (dim < 1) throw std::invalid_argument("angular dimension must be positive");
  AngularLaw law;
  law.kind_ = Kind::custom;
  law.dim_ = dim;
  law.sampler_ = std::move(sampler);
  law.description_ = std::move(description);
  return law;
}

Vector AngularLaw::sample(RandomSource& rng) const {
  switch (kind_) {
    case Kind::atoms: {
      if (directions_.size() == 1) return directions_.front();
      const double u = (1.0 - rng.uniform()) * cumulative_.back();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      if (it == cumulative_.end()) --it;
      return directions_[static_cast<std::size_t>(it - cumulative_.begin())];
    }
    case Kind::uniform: {
      if (dim_ == 1) return Vector::Constant(1, rng.uniform() <= 0.5 ? 1.0 : -1.0);
      Vector v(dim_);
      double norm = 0.0;
      do {
        for (int i = 0; i < dim_; ++i) v[i] = rng.normal();
        norm = v.norm();
      } while (norm == 0.0);
      return v / norm;
    }
    case Kind::custom:
      return sampler_(rng);
  }
  return {};
}

std::string AngularLaw::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::atoms:
      out << "atoms(" << directions_.size() << ", d=" << dim_ << ")";
      break;
    case Kind::uniform:
      out << "uniform(d=" << dim_ << ")";
      break;
    case Kind::custom:
      out << description_ << "(d=" << dim_ << ")";
      break;
  }
  return out.str();
}

RegVarLaw::RegVarLaw(double a, AngularLaw ang, double s)
    : alpha(a), angular(std::move(ang)), scale(s) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("tail index must be positive");
  if (!(s > 0.0) || !std::isfinite(s)) throw std::domain_error("scale must be positive");
}

double RegVarLaw::radius_survival(double t) const { return ParetoLaw(alpha).survival(t / scale); }

Vector sample_regvar(const RegVarLaw& law, RandomSource& rng) {
  const double radius = law.scale * sample_pareto(ParetoLaw(law.alpha), rng);
  return radius * law.angular.sample(rng);
}

Vector sample_regvar(const RegVarLaw& law, double u, const Vector& direction) {
  return law.scale * sample_pareto(ParetoLaw(law.alpha), u) * direction;
}

PolarPoint polar_decompose(const Vector& x) {
  PolarPoint p;
  p.radius = x.norm();
  p.direction = p.radius > 0.0 ? Vector(x / p.radius) : Vector::Zero(x.size());
  return p;
}

GaugeSet GaugeSet::ball(int dim, double radius) {
  if (dim < 1) throw std::invalid_argument("gauge dimension must be positive");
  if (!(radius > 0.0)) throw std::domain_error("ball radius must be positive");
  GaugeSet k;
  k.kind_ = Kind::ball;
  k.dim_ = dim;
  k.radius_ = radius;
  return k;
}

GaugeSet GaugeSet::half_space(Vector y0) {
  if (y0.size() < 1 || y0.norm() == 0.0)
    throw std::domain_error("half-space normal must be a nonzero vector");
  GaugeSet k;
  k.kind_ = Kind::half_space;
  k.dim_ = static_cast<int>(y0.size());
  k.y0_ = std::move(y0);
  return k;
}

double GaugeSet::rho_complement(const Vector& x) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (kind_ == Kind::ball) {
    const double n = x.norm();
    return n > 0.0 ? radius_ / n : inf;
  }
  const double s = x.dot(y0_);
  return s > 0.0 ? 1.0 / s : inf;
}

bool GaugeSet::in_cone(const Vector& x) const {
  if (kind_ == Kind::ball) return (x.array() == 0.0).all();
  return x.dot(y0_) <= 0.0;
}

double GaugeSet::margin() const { return kind_ == Kind::ball ? radius_ : 1.0 / y0_.norm(); }

std::string GaugeSet::describe() const {
  std::ostringstream out;
  if (kind_ == Kind::ball) {
    out << "ball(r=" << radius_ << ")";
  } else {
    out << "halfspace(y0=[";
    for (int i = 0; i < y0_.size(); ++i) out << (i ? "," : "") << y0_[i];
    out << "])";
  }
  return out.str();
}

double gauge_rho_complement(const GaugeSet& k, const Vector& x) { return k.rho_complement(x); }

bool in_cone_K0(const GaugeSet& k, const Vector& x) { return k.in_cone(x); }

}  // namespace rvlab
