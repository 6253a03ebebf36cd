#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rvlab/random.hpp"
#include "rvlab/rv_core.hpp"
#include "support.hpp"

using namespace rvlab;
using rvlab::testing::ScriptedSource;
using rvlab::testing::vec;

TEST_CASE("pareto inverse CDF values") {
  CHECK(sample_pareto(ParetoLaw(2.0), 0.25) == 2.0);
  CHECK(sample_pareto(ParetoLaw(1.0), 1.0) == 1.0);
  CHECK(sample_pareto(ParetoLaw(0.5), 0.01) == doctest::Approx(10000.0).epsilon(1e-12));
  CHECK_THROWS_AS(sample_pareto(ParetoLaw(2.0), 0.0), std::domain_error);
  CHECK_THROWS_AS(sample_pareto(ParetoLaw(2.0), 1.5), std::domain_error);
  CHECK_THROWS_AS(ParetoLaw(0.0), std::domain_error);
  CHECK(ParetoLaw(2.0).survival(0.5) == 1.0);
}

TEST_CASE("pareto survival inverts the sampler to a few ulp") {
  Stream s(1);
  for (double alpha : {0.3, 1.0, 2.5, 7.0}) {
    const ParetoLaw law(alpha);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 200; ++i) {
      const double u = i / 200.0;
      const double x = sample_pareto(law, u);
      CHECK(x >= 1.0);
      CHECK(x <= prev);
      prev = x;
      CHECK(std::abs(law.survival(x) - u) <= 4.0 * std::numeric_limits<double>::epsilon() * u * std::max(1.0, alpha));
    }
  }
}

TEST_CASE("regvar sampling composes radius and direction") {
  const RegVarLaw law(2.0, AngularLaw::point(vec({1.0, 0.0})));
  ScriptedSource src({0.25});
  const Vector x = sample_regvar(law, src);
  CHECK(x(0) == 2.0);
  CHECK(x(1) == 0.0);
  CHECK(sample_regvar(law, 0.25, vec({0.0, 1.0}))(1) == 2.0);

  const Vector theta0 = vec({0.6, -0.8});
  const RegVarLaw point(1.3, AngularLaw::point(theta0), 3.0);
  Stream s(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = polar_decompose(sample_regvar(point, s));
    CHECK(p.radius >= 3.0);
    CHECK((p.direction - theta0).norm() < 1e-12);
  }
}

TEST_CASE("regvar radius tail matches c^-alpha within 3 binomial s.e.") {
  const RegVarLaw law(1.5, AngularLaw::uniform(3));
  Stream s(3);
  const int n = 100000;
  std::vector<double> r(n);
  for (auto& v : r) v = sample_regvar(law, s).norm();
  for (double c : {2.0, 4.0, 8.0}) {
    const double p = std::pow(c, -1.5);
    const double hat = static_cast<double>(std::count_if(r.begin(), r.end(), [&](double v) { return v > c; })) / n;
    CHECK(std::abs(hat - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("angular laws validate their atoms") {
  CHECK_THROWS_AS(AngularLaw::atoms({vec({1.0, 0.1})}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AngularLaw::atoms({vec({1.0, 0.0}), vec({0.0, 1.0})}, {0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(AngularLaw::atoms({vec({1.0, 0.0}), vec({0.0, 1.0})}, {1.2, -0.2}), std::invalid_argument);
  CHECK_THROWS_AS(AngularLaw::atoms({vec({1.0, 0.0}), vec({1.0})}, {0.5, 0.5}), std::invalid_argument);
  CHECK_NOTHROW(AngularLaw::atoms({vec({1.0, 0.0}), vec({0.0, 1.0})}, {0.5, 0.5}));
  CHECK_THROWS_AS(AngularLaw::uniform(0), std::invalid_argument);
}

TEST_CASE("uniform angular law is on the sphere and balanced") {
  Stream s(4);
  const auto law1 = AngularLaw::uniform(1);
  int plus = 0;
  for (int i = 0; i < 10000; ++i) plus += law1.sample(s)(0) > 0 ? 1 : 0;
  CHECK(plus == doctest::Approx(5000).epsilon(0.05));
  const auto law3 = AngularLaw::uniform(3);
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < 20000; ++i) {
    const Vector v = law3.sample(s);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    mean += v / 20000.0;
  }
  CHECK(mean.norm() < 0.03);
}

TEST_CASE("polar decomposition") {
  const auto p = polar_decompose(vec({3.0, 4.0}));
  CHECK(p.radius == 5.0);
  CHECK(p.direction(0) == doctest::Approx(0.6));
  CHECK(p.direction(1) == doctest::Approx(0.8));
  const auto z = polar_decompose(vec({0.0, 0.0}));
  CHECK(z.is_zero());
  CHECK(z.direction.norm() == 0.0);
  const Vector u = vec({1.0, 2.0, -2.0}) / 3.0;
  const auto q = polar_decompose(u);
  CHECK(q.radius == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((q.direction - u).norm() < 1e-15);
  Stream s(5);
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec({s.normal(), s.normal()}) * 100.0;
    const auto r = polar_decompose(x);
    CHECK((r.radius * r.direction - x).norm() <= 1e-12 * x.norm());
  }
}

TEST_CASE("gauge of the complement for half-spaces and balls") {
  const auto h = GaugeSet::half_space(vec({1.0, 0.0}));
  CHECK(h.rho_complement(vec({2.0, 5.0})) == 0.5);
  CHECK(std::isinf(h.rho_complement(vec({-1.0, 3.0}))));
  CHECK(std::isinf(h.rho_complement(vec({0.0, 3.0}))));
  const auto b = GaugeSet::ball(2, 1.0);
  CHECK(b.rho_complement(vec({0.0, 4.0})) == 0.25);
  CHECK(std::isinf(b.rho_complement(vec({0.0, 0.0}))));
  CHECK(gauge_rho_complement(b, vec({4.0, 0.0})) == 0.25);
  CHECK(h.margin() == 1.0);
  CHECK(GaugeSet::half_space(vec({0.0, 2.0})).margin() == 0.5);
  CHECK(GaugeSet::ball(3, 2.5).margin() == 2.5);
  CHECK_THROWS_AS(GaugeSet::half_space(vec({0.0, 0.0})), std::domain_error);
  CHECK_THROWS_AS(GaugeSet::ball(2, -1.0), std::domain_error);
}

TEST_CASE("cone K0 membership") {
  const auto b = GaugeSet::ball(2, 1.0);
  CHECK(in_cone_K0(b, vec({0.0, 0.0})));
  CHECK_FALSE(in_cone_K0(b, vec({1e-9, 0.0})));
  const auto h = GaugeSet::half_space(vec({1.0, 0.0}));
  CHECK(in_cone_K0(h, vec({-3.0, 7.0})));
  CHECK_FALSE(in_cone_K0(h, vec({0.1, 0.0})));
}

TEST_CASE("gauge homogeneity, margin bound and cone invariance on random triples") {
  Stream s(6);
  for (int i = 0; i < 1000; ++i) {
    const Vector y0 = vec({s.normal(), s.normal(), s.normal()});
    const auto k = i % 2 ? GaugeSet::half_space(y0) : GaugeSet::ball(3, 0.1 + s.uniform());
    const Vector x = vec({s.normal(), s.normal(), s.normal()});
    const double c = std::exp(4.0 * s.normal());
    const double r = k.rho_complement(x);
    const double rc = k.rho_complement(c * x);
    if (std::isfinite(r)) {
      CHECK(std::abs(rc - r / c) <= 1e-9 * r / c);
      CHECK(r >= k.margin() / x.norm() * (1.0 - 1e-12));
    } else {
      CHECK(std::isinf(rc));
    }
    if (k.in_cone(x)) CHECK(k.in_cone(c * x));
  }
}

TEST_CASE("angular atom frequencies pass a chi-square test") {
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const auto law = AngularLaw::atoms({vec({1, 0}), vec({0, 1}), vec({-1, 0}), vec({0, -1})}, w);
  Stream s(7);
  std::vector<double> counts(4, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vector v = law.sample(s);
    for (std::size_t a = 0; a < 4; ++a)
      if (v == law.directions()[a]) counts[a] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t a = 0; a < 4; ++a) chi2 += std::pow(counts[a] - w[a] * n, 2) / (w[a] * n);
  CHECK(chi2 < 11.345);  // 0.99 quantile, 3 degrees of freedom
}
