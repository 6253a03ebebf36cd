#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <map>
#include <vector>

#include "rvlab/errors.hpp"
#include "rvlab/parallel.hpp"
#include "rvlab/estimators.hpp"
#include "rvlab/markov.hpp"
#include "rvlab/series.hpp"
#include "support.hpp"

using namespace rvlab;
using rvlab::testing::scalar;
using rvlab::testing::vec;

namespace {

RegVarLaw positive_pareto(double alpha) { return RegVarLaw(alpha, AngularLaw::point(vec({1.0}))); }
RegVarLaw symmetric_pareto(double alpha) { return RegVarLaw(alpha, AngularLaw::uniform(1)); }

Matrix random_matrix(Stream& s, int d) {
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = s.normal();
  return m;
}

PsiModel zero_psi() {
  PsiModel pm = bilinear_scalar(0.5);
  auto zero = [](const Element& m, const Element&) -> Element { return Element::Zero(m.rows(), m.cols()); };
  pm.psi = pm.chi = pm.zeta = zero;
  pm.psi_star = [](const Element&) { return 0.0; };
  return pm;
}

std::vector<double> norms(const std::vector<SeriesDraw>& draws) {
  std::vector<double> out;
  for (const auto& d : draws) out.push_back(element_norm(d.value));
  return out;
}

}  // namespace

TEST_CASE("matrix norms are submultiplicative and products associative") {
  Stream s(70);
  for (int i = 0; i < 10000; ++i) {
    const int d = 1 + i % 4;
    const Matrix x = random_matrix(s, d), y = random_matrix(s, d), z = random_matrix(s, d);
    CHECK(element_norm(x * y) <= element_norm(x) * element_norm(y) * (1.0 + 1e-9));
    CHECK(operator_norm(x * y) <= operator_norm(x) * operator_norm(y) * (1.0 + 1e-9));
    CHECK(operator_norm(x) <= element_norm(x) * (1.0 + 1e-12));
    const Matrix l = (x * y) * z, r = x * (y * z);
    CHECK(element_norm(l - r) <= 1e-9 * element_norm(x) * element_norm(y) * element_norm(z));
  }
  Matrix p(2, 2);
  p << 1, 3, 2, 4;
  CHECK(flatten(p) == vec({1.0, 2.0, 3.0, 4.0}));
  CHECK(element_norm(p) == doctest::Approx(std::sqrt(30.0)));
}

TEST_CASE("growth bounds of the built-in recursions") {
  Stream s(71);
  for (const auto& [pm, d, cols] : std::vector<std::tuple<PsiModel, int, int>>{
           {bilinear_scalar(0.7), 1, 1}, {matrix_bilinear(-0.5), 3, 3}, {rde_pair(2), 2, 3}}) {
    std::vector<LimitProbe> probes;
    for (int i = 0; i < 2000; ++i) {
      Matrix n(d, cols);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < cols; ++b) n(a, b) = 3.0 * s.normal();
      probes.push_back({random_matrix(s, d), n});
    }
    const auto g = check_psi_growth(pm, probes);
    CHECK(g.holds());
  }
}

TEST_CASE("chi and zeta limit checks") {
  const std::vector<double> grid{10.0, 1024.0, 1048576.0};
  std::vector<LimitProbe> probes{{scalar(0.75), scalar(-2.0)}, {scalar(3.0), scalar(0.5)}};
  const auto exact = chi_zeta_limit_check(bilinear_scalar(0.5), probes, grid, 1e-12);
  for (const auto& row : exact.rows) {
    CHECK(row.chi_error == 0.0);
    CHECK(row.zeta_error == 0.0);
  }
  CHECK(exact.passed());

  PsiModel wobble = bilinear_scalar(1.0);
  wobble.psi = [](const Element& m, const Element& n) -> Element { return m * n + scalar(std::sin(m.norm())); };
  const auto w = chi_zeta_limit_check(wobble, probes, grid, 1e-5);
  CHECK(w.passed());
  for (const auto& row : w.rows) CHECK(row.chi_error <= 1.0 / row.t + 1e-15);

  PsiModel shifted = bilinear_scalar(1.0);
  shifted.psi = [](const Element& m, const Element& n) -> Element { return m * n + m; };
  const auto bad = chi_zeta_limit_check(shifted, probes, grid, 1e-5);
  CHECK_FALSE(bad.passed());
  CHECK_FALSE(bad.chi_pass[0]);
  CHECK(bad.rows.back().chi_error == doctest::Approx(3.0));

  CHECK_THROWS(chi_zeta_limit_check(bilinear_scalar(0.5), probes, {10.0, 1000.0}, 1e-5));
  CHECK_THROWS(chi_zeta_limit_check(bilinear_scalar(0.5), probes, {1e7, 1e6}, 1e-5));
}

TEST_CASE("series model validation") {
  const auto inn = innovation_from_regvar(positive_pareto(3.0), 1, 1);
  CHECK_THROWS(SeriesModel(SeriesMode::adaptable, bilinear_scalar(0.5), inn, scalar(1.0), {0, 1e-10, 1.0}));
  CHECK_THROWS(SeriesModel(SeriesMode::adaptable, bilinear_scalar(0.5), inn, scalar(1.0), {10, 0.0, 1.0}));
  const SeriesModel a(SeriesMode::adaptable, bilinear_scalar(0.5), inn, scalar(1.0));
  CHECK(a.tail_index() == 1.5);
  const SeriesModel p(SeriesMode::predictable, bilinear_scalar(0.5), inn, scalar(1.0));
  CHECK(p.tail_index() == 3.0);
  Stream s(72);
  CHECK_THROWS_AS(sample_R_predictable(a, s), PreconditionError);
  CHECK_THROWS_AS(sample_S_adaptable(p, s), PreconditionError);
}

TEST_CASE("contractivity moments") {
  Stream s(73);
  const SeriesModel pareto3(SeriesMode::adaptable, bilinear_scalar(0.5), innovation_from_regvar(positive_pareto(3.0), 1, 1), scalar(1.0));
  const auto c = contractivity_check(pareto3, 1.5, 100000, s);
  // E N^1.5 = 3 / 1.5 for Pareto(3).
  CHECK(std::abs(c.estimate - std::pow(0.5, 1.5) * 2.0) < 0.05);
  CHECK_FALSE(c.heavy_moment);
  CHECK(c.passed);

  const SeriesModel fixed(SeriesMode::adaptable, bilinear_scalar(0.9), constant_innovation(scalar(1.0), 2.0), scalar(1.0));
  const auto f = contractivity_check(fixed, 1.7, 10000, s);
  CHECK(f.estimate == std::pow(0.9, 1.7));
  CHECK(f.se == 0.0);
  CHECK(f.passed);

  const SeriesModel pareto2(SeriesMode::predictable, bilinear_scalar(1.0), innovation_from_regvar(positive_pareto(2.0), 1, 1), scalar(1.0));
  const auto h = contractivity_check(pareto2, 2.0, 100000, s);
  CHECK(h.heavy_moment);
  CHECK_FALSE(h.passed);
  CHECK_THROWS(contractivity_check(pareto2, 2.0, 100, s));
}

TEST_CASE("adaptable series with trivial and geometric coefficients") {
  Stream s(74);
  const SeriesModel zero(SeriesMode::adaptable, zero_psi(), innovation_from_regvar(positive_pareto(3.0), 1, 1), scalar(1.0));
  const auto z = sample_S_adaptable(zero, s);
  CHECK(z.value(0, 0) == 0.0);
  CHECK(z.n_terms == 1);
  const SeriesModel geo(SeriesMode::adaptable, bilinear_scalar(0.5), constant_innovation(scalar(1.0), 3.0), scalar(1.0),
                        {200, 1e-14, 1.0});
  const auto g = sample_S_adaptable(geo, s);
  CHECK(g.value(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_FALSE(g.truncation_warning);
  CHECK(g.remainder_bound < 1e-14);
  const SeriesModel capped(SeriesMode::adaptable, bilinear_scalar(0.5), constant_innovation(scalar(1.0), 3.0), scalar(1.0),
                           {5, 1e-14, 1.0});
  const auto c = sample_S_adaptable(capped, s);
  CHECK(c.n_terms == 5);
  CHECK(c.truncation_warning);
  CHECK(c.value(0, 0) == doctest::Approx(1.0 - std::pow(0.5, 5)));
}

TEST_CASE("predictable series keeps the index shift") {
  Stream s(75);
  // psi == 0 leaves only the first term combine(h0, N_1).
  const SeriesModel zero(SeriesMode::predictable, zero_psi(), constant_innovation(scalar(3.0), 2.0), scalar(2.0));
  const auto z = sample_R_predictable(zero, s);
  CHECK(z.value(0, 0) == 2.0 * 3.0);
  const SeriesModel geo(SeriesMode::predictable, bilinear_scalar(0.5), constant_innovation(scalar(1.0), 3.0), scalar(1.0),
                        {200, 1e-14, 1.0});
  CHECK(sample_R_predictable(geo, s).value(0, 0) == doctest::Approx(2.0).epsilon(1e-13));

  // The RDE pairing reproduces sum_k A_1...A_k B_{k+1} term by term under matched draws.
  const RdeModel rde(MatrixLaw::scalar_uniform(0.0, 0.5), VectorLaw::regvar(symmetric_pareto(2.0)));
  const SeriesModel pair(SeriesMode::predictable, rde_pair(1), rde_pair_innovation(MatrixLaw::scalar_uniform(0.0, 0.5), symmetric_pareto(2.0)),
                         scalar(1.0), {30, 1e-300, 1.0});
  Stream a(76), b(76);
  for (int i = 0; i < 100; ++i) {
    const double direct = rde_series_sample(rde, 30, a)(0);
    const double series = sample_R_predictable(pair, b).value(0, 0);
    CHECK(series == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("calibrated truncation bounds the remainder") {
  Stream s(77);
  SeriesModel m(SeriesMode::adaptable, bilinear_scalar(0.5), innovation_from_regvar(symmetric_pareto(3.0), 1, 1), scalar(1.0),
                {1000, 1e-8, 1.0});
  calibrate_truncation(m, 2000, s);
  CHECK(m.truncation.remainder_scale > 1.0);
  const auto draws = sample_series(m, 2000, s);
  int warnings = 0;
  for (const auto& d : draws) {
    CHECK(d.n_terms >= 1);
    if (d.truncation_warning) ++warnings;
    else CHECK(d.remainder_bound < 1e-8);
  }
  CHECK(warnings <= 20);
}

TEST_CASE("series draws do not depend on thread count") {
  const SeriesModel m(SeriesMode::adaptable, matrix_bilinear(0.3), diagonal_innovation(RegVarLaw(3.0, AngularLaw::uniform(2))),
                      Matrix::Identity(2, 2));
  set_thread_count(1);
  Stream a(78);
  const auto x = sample_series(m, 300, a);
  set_thread_count(3);
  Stream b(78);
  const auto y = sample_series(m, 300, b);
  set_thread_count(0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].value == y[i].value);
}

TEST_CASE("theta_SM on positive models is a point mass") {
  Stream s(79);
  const SeriesModel m(SeriesMode::adaptable, bilinear_scalar(0.5), innovation_from_regvar(positive_pareto(3.0), 1, 1), scalar(1.0));
  const auto r = sample_theta_SM(m, 2000, 20, s);
  CHECK(r.tail_index_claimed == 1.5);
  double total = 0.0;
  for (std::size_t i = 0; i < r.measure.size(); ++i) {
    CHECK(r.measure.directions(0, static_cast<Eigen::Index>(i)) == 1.0);
    total += r.measure.weights[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("theta_SM term selection matches hand-computed weights") {
  Stream s(80);
  // M_k = 0.5^k, so with alpha = 2 the weights are w_k = 0.5 M_{k-1} = 0.5^k.
  const SeriesModel m(SeriesMode::adaptable, bilinear_scalar(0.5), constant_innovation(scalar(1.0), 2.0), scalar(1.0));
  const std::size_t n = 70000;
  const auto r = sample_theta_SM(m, n, 3, s);
  CHECK(r.lambda_hat == doctest::Approx(0.875).epsilon(1e-12));
  std::map<int, double> freq;
  for (int k : r.atom_terms) freq[k] += 1.0;
  const std::vector<double> p{4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0};
  for (int k = 1; k <= 3; ++k) {
    const double pk = p[static_cast<std::size_t>(k - 1)];
    CHECK(std::abs(freq[k] / n - pk) <= 3.0 * std::sqrt(pk * (1 - pk) / n));
  }
}

TEST_CASE("lambda_hat matches the geometric closed form for the scalar model") {
  Stream s(81);
  // Lambda = sum_j c^{j alpha/2} (E N^{alpha/2})^{j-1} = c^{1.5} / (1 - 2 c^{1.5}) for Pareto(3).
  const double c = 0.25;
  const double lambda = std::pow(c, 1.5) / (1.0 - 2.0 * std::pow(c, 1.5));
  const SeriesModel m(SeriesMode::adaptable, bilinear_scalar(c), innovation_from_regvar(symmetric_pareto(3.0), 1, 1), scalar(1.0));
  const auto r = sample_theta_SM(m, 100000, 40, s);
  CHECK(std::abs(r.lambda_hat - lambda) <= 3.0 * r.lambda_se);
}

TEST_CASE("theta_R with a vanishing U-chain keeps only the first term") {
  Stream s(82);
  PsiModel pm = matrix_bilinear(0.5);
  pm.chi = pm.zeta = [](const Element& m, const Element&) -> Element { return Element::Zero(m.rows(), m.cols()); };
  Matrix h0(2, 2);
  h0 << 2.0, 0.0, 0.0, 1.0;
  const SeriesModel m(SeriesMode::predictable, pm, constant_innovation(Matrix::Identity(2, 2), 2.0), h0);
  const auto r = sample_theta_R(m, 10, 1, 5, s);
  REQUIRE(r.measure.size() == 10);
  const Vector expected = flatten(h0) / element_norm(h0);
  for (Eigen::Index j = 0; j < 10; ++j) CHECK((r.measure.directions.col(j) - expected).norm() < 1e-12);
}

TEST_CASE("theta_R for a positive scalar RDE pairing is a point mass") {
  Stream s(83);
  const SeriesModel m(SeriesMode::predictable, rde_pair(1), rde_pair_innovation(MatrixLaw::scalar_uniform(0.0, 0.5), positive_pareto(2.0)),
                      scalar(1.0));
  for (auto weighting : {ThetaRWeighting::pooled, ThetaRWeighting::per_trajectory}) {
    ThetaROptions opt;
    opt.weighting = weighting;
    const auto r = sample_theta_R(m, 1000, 10, 10, s, opt);
    CHECK(r.tail_index_claimed == 2.0);
    double total = 0.0;
    for (std::size_t i = 0; i < r.measure.size(); ++i) {
      CHECK(r.measure.directions(0, static_cast<Eigen::Index>(i)) == 1.0);
      total += r.measure.weights[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("predictable RDE tail constant is the geometric single-jump sum") {
  Stream s(84);
  // A == 0.5 gives P[|R| > t] / P[|B| > t] -> 1 / (1 - 0.25).
  const SeriesModel m(SeriesMode::predictable, rde_pair(1), rde_pair_innovation(MatrixLaw::constant(scalar(0.5)), symmetric_pareto(2.0)),
                      scalar(1.0), {60, 1e-12, 1.0});
  const std::size_t n = 1000000;
  const auto r = norms(sample_series(m, n, s));
  const double t = std::pow(1000.0, 0.5);
  const double hits = static_cast<double>(std::count_if(r.begin(), r.end(), [&](double v) { return v > t; }));
  const double ratio = hits / n / std::pow(t, -2.0);
  CHECK(std::abs(ratio - 4.0 / 3.0) <= 0.15 * 4.0 / 3.0);
}
