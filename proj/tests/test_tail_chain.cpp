#include <doctest.h>

#include <cmath>
#include <vector>

#include "rvlab/errors.hpp"
#include "rvlab/parallel.hpp"
#include "rvlab/tail_chain.hpp"
#include "support.hpp"

using namespace rvlab;
using rvlab::testing::scalar;
using rvlab::testing::vec;

namespace {

TailLimitModel pm_half() { return linear_tail_limits(MatrixLaw::scalar_choice({-0.5, 0.5}), AngularLaw::uniform(1), 2.0); }
TailLimitModel rotation() { return linear_tail_limits(MatrixLaw::scaled_rotation(0.4), AngularLaw::uniform(2), 2.0); }

RdeModel grey_const() {
  return RdeModel(MatrixLaw::constant(scalar(0.5)), VectorLaw::regvar(RegVarLaw(2.0, AngularLaw::point(vec({1.0})))));
}

RdeModel benchmark_2d() {
  return RdeModel(MatrixLaw::lower_triangular({0.0, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}),
                  VectorLaw::regvar(RegVarLaw(2.0, AngularLaw::uniform(2))), vec({1.0, 0.0}));
}

double weight_sum(const SpectralSampleResult& r) {
  double s = 0.0;
  for (double w : r.measure.weights) s += w;
  return s;
}

}  // namespace

TEST_CASE("tail chain trajectories") {
  Stream s(50);
  const auto m = rde_tail_limits(grey_const());
  const auto p = simulate_tail_chain(m, vec({1.0}), 3, s);
  REQUIRE(p.size() == 4);
  CHECK(p[1](0) == 0.5);
  CHECK(p[2](0) == 0.25);
  CHECK(p[3](0) == 0.125);
  const auto z = simulate_tail_chain(rotation(), vec({0.0, 0.0}), 5, s);
  for (const auto& v : z) CHECK(v.norm() == 0.0);
  const RdeModel light(MatrixLaw::constant(scalar(0.5)), VectorLaw::constant(vec({1.0})));
  CHECK_THROWS_AS(rde_tail_limits(light), PreconditionError);
}

TEST_CASE("linear tail chains are exactly homogeneous under matched seeds") {
  const Vector z0 = vec({0.3, -0.7});
  for (double c : {0.5, 2.0, 10.0}) {
    Stream a(51), b(51);
    const auto base = simulate_tail_chain(rotation(), z0, 10, a);
    const auto scaled = simulate_tail_chain(rotation(), Vector(c * z0), 10, b);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK((scaled[i] - c * base[i]).norm() <= 1e-12 * c * z0.norm());
  }
}

TEST_CASE("rho* estimates") {
  Stream s(52);
  const auto pm = estimate_rho_star(pm_half(), 4, 2000, s);
  CHECK(pm.value == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pm.contractive());
  CHECK(pm.directions_probed == 4);
  const auto rot = estimate_rho_star(rotation(), 16, 2000, s, {vec({1.0, 1.0})});
  CHECK(rot.value == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(rot.directions_probed == 17);
  const auto id = estimate_rho_star(linear_tail_limits(MatrixLaw::constant(Matrix::Identity(2, 2)), AngularLaw::uniform(2), 1.3), 8, 1000, s);
  CHECK(id.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(id.contractive());
  // 0.16^k < 0.5^2 first at k = 1; 0.25^k < 0.1^2 first at k = 4.
  CHECK(estimate_rho_star(rotation(), 4, 1000, s, {}, 0.5).k0 == 1);
  CHECK(estimate_rho_star(pm_half(), 4, 1000, s, {}, 0.1).k0 == 4);
}

TEST_CASE("rho* flags an infinite moment") {
  Stream s(53);
  TailLimitModel heavy = linear_tail_limits(MatrixLaw::constant(scalar(1.0)), AngularLaw::uniform(1), 2.0);
  heavy.linear = false;
  heavy.z_step = [](const Vector& z, RandomSource& r) -> Vector { return 0.1 * z * sample_pareto(ParetoLaw(1.5), r); };
  CHECK_THROWS_AS(estimate_rho_star(heavy, 2, 20000, s), HeavyMoment);
}

TEST_CASE("moment bound of the tail chain") {
  Stream s(54);
  const auto pm = pm_half();
  const auto rho = estimate_rho_star(pm, 4, 2000, s);
  const auto r = verify_z_moment_bound(pm, rho, {vec({1.0}), vec({-1.0})}, {0, 1, 4, 8}, 5000, s);
  CHECK(r.exceedances() == 0);
  for (const auto& c : r.cells) {
    CHECK(c.mean == doctest::Approx(std::pow(0.25, c.n)).epsilon(1e-12));
    if (c.n == 0) CHECK(c.bound == 1.0);
  }
  const auto rot = rotation();
  const auto rrho = estimate_rho_star(rot, 8, 2000, s);
  const auto rr = verify_z_moment_bound(rot, rrho, {vec({1.0, 0.0}), vec({0.6, 0.8})}, {1, 2, 3, 5, 8}, 2000, s);
  CHECK(rr.exceedances() == 0);
  for (const auto& c : rr.cells) CHECK(c.mean == doctest::Approx(std::pow(0.16, c.n)).epsilon(1e-10));
}

TEST_CASE("theta_n with a single step is the angular law at x0") {
  Stream s(55);
  const auto model = benchmark_2d();
  const auto r = sample_theta_n(model.as_markov(), rde_tail_limits(model), vec({1.0, 1.0}), 1, 4000, s);
  CHECK(r.normalizer == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.measure.size() == 4000);
  CHECK(weight_sum(r) == doctest::Approx(1.0).epsilon(1e-9));
  const Eigen::Vector2d mean = r.measure.directions.rowwise().mean();
  CHECK(mean.norm() < 0.05);
}

TEST_CASE("theta_n normalizer matches the geometric sum") {
  Stream s(56);
  const auto model = grey_const();
  // C_3 = sum_{j<3} 0.5^{2(3-j-1)}.
  const auto r = sample_theta_n(model.as_markov(), rde_tail_limits(model), vec({0.0}), 3, 500, s);
  CHECK(r.normalizer == doctest::Approx(1.0 + 0.25 + 0.0625).epsilon(1e-12));
  for (Eigen::Index j = 0; j < r.measure.directions.cols(); ++j) CHECK(r.measure.directions(0, j) == 1.0);
  SpectralOptions no_j0;
  no_j0.include_j0 = false;
  const auto r2 = sample_theta_n(model.as_markov(), rde_tail_limits(model), vec({0.0}), 3, 500, s, no_j0);
  CHECK(r2.normalizer == doctest::Approx(1.25).epsilon(1e-12));
  SpectralOptions unit;
  unit.unit_indicator = true;
  const auto r3 = sample_theta_n(model.as_markov(), rde_tail_limits(model), vec({0.0}), 3, 500, s, unit);
  CHECK(r3.normalizer == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("theta_n does not depend on thread count") {
  const auto model = benchmark_2d();
  const auto limits = rde_tail_limits(model);
  set_thread_count(1);
  Stream a(57);
  const auto r1 = sample_theta_n(model.as_markov(), limits, vec({1.0, 1.0}), 3, 2000, a);
  set_thread_count(4);
  Stream b(57);
  const auto r4 = sample_theta_n(model.as_markov(), limits, vec({1.0, 1.0}), 3, 2000, b);
  set_thread_count(0);
  CHECK(r1.normalizer == r4.normalizer);
  CHECK(r1.measure.directions == r4.measure.directions);
  CHECK(r1.measure.weights == r4.measure.weights);
}

TEST_CASE("theta_n with every weight zero") {
  Stream s(58);
  const auto limits = linear_tail_limits(MatrixLaw::constant(scalar(0.0)), AngularLaw::uniform(1), 1.0);
  const auto chain = RdeModel(MatrixLaw::constant(scalar(0.0)), VectorLaw::constant(vec({1.0}))).as_markov();
  SpectralOptions no_j0;
  no_j0.include_j0 = false;
  CHECK_THROWS_AS(sample_theta_n(chain, limits, vec({0.0}), 1, 10, s, no_j0), ZeroMass);
}

TEST_CASE("theta_pi on one-sided and contractive models") {
  Stream s(59);
  const RdeModel grey(MatrixLaw::scalar_uniform(0.0, 0.5), VectorLaw::regvar(RegVarLaw(2.0, AngularLaw::point(vec({1.0})))));
  const auto limits = rde_tail_limits(grey);
  const auto rho = estimate_rho_star(limits, 4, 4000, s);
  // E U(0, 0.5)^2 = 1/12.
  CHECK(std::abs(rho.value - 1.0 / 12.0) <= 4.0 * rho.se);
  const StationarySampler st{grey.as_markov(), 200, 2, vec({0.0})};
  const auto k = GaugeSet::half_space(vec({1.0}));
  int j_max = 0;
  while (std::pow(rho.value, j_max) >= 1e-4) ++j_max;
  const auto r = sample_theta_pi(st, limits, k, rho, j_max, 2000, s, ConeRestriction::complement);
  CHECK(r.truncation_j == j_max);
  CHECK(r.truncation_bound < 1e-3 * r.normalizer);
  CHECK(weight_sum(r) == doctest::Approx(1.0).epsilon(1e-9));
  for (Eigen::Index j = 0; j < r.measure.directions.cols(); ++j) CHECK(r.measure.directions(0, j) == 1.0);

  const auto id = linear_tail_limits(MatrixLaw::constant(scalar(1.0)), AngularLaw::point(vec({1.0})), 2.0);
  const auto rho_id = estimate_rho_star(id, 2, 1000, s);
  CHECK_THROWS_AS(sample_theta_pi(st, id, k, rho_id, 5, 10, s, ConeRestriction::complement), PreconditionError);
}

TEST_CASE("recursion check at n = 2 agrees on the Grey model") {
  Stream s(60);
  const RdeModel grey(MatrixLaw::scalar_uniform(0.5, 0.5), VectorLaw::regvar(RegVarLaw(2.0, AngularLaw::uniform(1))));
  const auto c = recursion_check_n2(grey.as_markov(), rde_tail_limits(grey), vec({0.0}), 200.0, 400000, s);
  CHECK(c.formula == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(std::abs(c.z_score()) <= 3.0);
}
