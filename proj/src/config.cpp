#include "rvlab/config.hpp"

#include <cmath>

#include "rvlab/errors.hpp"

namespace rvlab {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing key '") + key + "'");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

double number_at(const Json& j, const char* key, const std::string& where) {
  return number(member(j, key, where), where + "." + key);
}

std::pair<double, double> interval(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [lo, hi]");
  const double lo = number(j[0], where + "[0]");
  const double hi = number(j[1], where + "[1]");
  if (!(lo <= hi)) fail(where, "interval lower end exceeds upper end");
  return {lo, hi};
}

// Evaluates a builder and rewraps library argument errors with the key path.
template <class Fn>
auto guarded(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::logic_error& e) {
    fail(where, e.what());
  }
}

}  // namespace

Vector parse_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Matrix parse_matrix(const Json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty() || !j[0].is_array()) fail(where, "expected a number or an array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = parse_vector(j[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) fail(where, "rows have different lengths");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

AngularLaw parse_angular(const Json& j, int dim_hint, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() != "uniform") fail(where, "unknown angular law '" + j.get<std::string>() + "'");
    if (dim_hint < 1) fail(where, "uniform angular law needs 'dim'");
    return AngularLaw::uniform(dim_hint);
  }
  if (!j.is_object()) fail(where, "expected \"uniform\" or an object");
  if (j.contains("uniform")) {
    const double d = number(j["uniform"], where + ".uniform");
    if (d < 1 || d != std::floor(d)) fail(where + ".uniform", "dimension must be a positive integer");
    return AngularLaw::uniform(static_cast<int>(d));
  }
  if (j.contains("point")) return guarded(where, [&] { return AngularLaw::point(parse_vector(j["point"], where + ".point")); });
  if (j.contains("atoms")) {
    const Json& atoms = j["atoms"];
    if (!atoms.is_array() || atoms.empty()) fail(where + ".atoms", "expected [[direction, weight], ...]");
    std::vector<Vector> dirs;
    std::vector<double> weights;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string at = where + ".atoms[" + std::to_string(i) + "]";
      if (!atoms[i].is_array() || atoms[i].size() != 2) fail(at, "expected [direction, weight]");
      dirs.push_back(parse_vector(atoms[i][0], at + "[0]"));
      weights.push_back(number(atoms[i][1], at + "[1]"));
    }
    return guarded(where, [&] { return AngularLaw::atoms(dirs, weights); });
  }
  fail(where, "angular law needs one of 'uniform', 'point', 'atoms'");
}

RegVarLaw parse_regvar(const Json& j, const std::string& where) {
  const double alpha = number_at(j, "alpha", where);
  int dim = 0;
  if (j.contains("dim")) dim = static_cast<int>(number(j["dim"], where + ".dim"));
  const AngularLaw angular = parse_angular(member(j, "angular", where), dim, where + ".angular");
  const double scale = j.contains("scale") ? number(j["scale"], where + ".scale") : 1.0;
  return guarded(where, [&] { return RegVarLaw(alpha, angular, scale); });
}

GaugeSet parse_gauge(const Json& j, const std::string& where) {
  const Json& kind = member(j, "gauge", where);
  if (kind == "ball") {
    const double d = number_at(j, "dim", where);
    return guarded(where, [&] { return GaugeSet::ball(static_cast<int>(d), number_at(j, "r", where)); });
  }
  if (kind == "halfspace")
    return guarded(where, [&] { return GaugeSet::half_space(parse_vector(member(j, "y0", where), where + ".y0")); });
  fail(where + ".gauge", "expected \"ball\" or \"halfspace\"");
}

MatrixLaw parse_matrix_law(const Json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) fail(where, "matrix law must be an object with exactly one key");
  const std::string key = j.begin().key();
  const Json& value = j.begin().value();
  const std::string at = where + "." + key;
  if (key == "const") return guarded(at, [&] { return MatrixLaw::constant(parse_matrix(value, at)); });
  if (key == "uniform") {
    const auto [lo, hi] = interval(value, at);
    return guarded(at, [&] { return MatrixLaw::scalar_uniform(lo, hi); });
  }
  if (key == "choice") {
    const Vector v = parse_vector(value, at);
    return guarded(at, [&] { return MatrixLaw::scalar_choice(std::vector<double>(v.data(), v.data() + v.size())); });
  }
  if (key == "lower_triangular") {
    const auto lambda = interval(member(value, "lambda", at), at + ".lambda");
    const auto c = interval(member(value, "c", at), at + ".c");
    const auto mu = interval(member(value, "mu", at), at + ".mu");
    return guarded(at, [&] { return MatrixLaw::lower_triangular(lambda, c, mu); });
  }
  if (key == "rotation") return guarded(at, [&] { return MatrixLaw::scaled_rotation(number(value, at)); });
  fail(where, "unknown matrix law '" + key + "'");
}

VectorLaw parse_vector_law(const Json& j, const std::string& where) {
  if (j.is_object() && j.contains("const")) return VectorLaw::constant(parse_vector(j["const"], where + ".const"));
  if (j.is_object() && j.contains("alpha")) return VectorLaw::regvar(parse_regvar(j, where));
  fail(where, "vector law needs 'const' or a regularly varying law with 'alpha'");
}

RdeModel parse_rde(const Json& j, const std::string& where) {
  MatrixLaw a = parse_matrix_law(member(j, "a", where), where + ".a");
  VectorLaw b = parse_vector_law(member(j, "b", where), where + ".b");
  std::optional<Vector> y0;
  if (j.contains("y0")) y0 = parse_vector(j["y0"], where + ".y0");
  return guarded(where, [&] { return RdeModel(a, b, y0); });
}

TailLimitModel parse_tail_limits(const Json& j, const std::string& where) {
  if (j.contains("rde")) return guarded(where, [&] { return rde_tail_limits(parse_rde(j["rde"], where + ".rde")); });
  const Json& tc = member(j, "tail_chain", where);
  const std::string at = where + ".tail_chain";
  MatrixLaw a = parse_matrix_law(member(tc, "a", at), at + ".a");
  const AngularLaw theta = parse_angular(member(tc, "angular", at), a.dim(), at + ".angular");
  const double alpha = number_at(tc, "alpha", at);
  return guarded(at, [&] { return linear_tail_limits(a, theta, alpha); });
}

SeriesModel parse_series(const Json& j, SeriesMode mode, const std::string& where) {
  const Json& psi_j = member(j, "psi", where);
  const std::string psi_at = where + ".psi";
  const Json& kind = member(psi_j, "kind", psi_at);
  const Json& inn_j = member(j, "innovation", where);
  const std::string inn_at = where + ".innovation";
  const std::string shape = inn_j.value("shape", std::string("scalar"));

  InnovationLaw innovation;
  int coef_dim = 1;
  if (shape == "pair") {
    const RegVarLaw b = parse_regvar(member(inn_j, "b", inn_at), inn_at + ".b");
    MatrixLaw a = parse_matrix_law(member(inn_j, "a", inn_at), inn_at + ".a");
    innovation = guarded(inn_at, [&] { return rde_pair_innovation(a, b); });
    coef_dim = b.dim();
  } else if (shape == "scalar") {
    innovation = guarded(inn_at, [&] { return innovation_from_regvar(parse_regvar(inn_j, inn_at), 1, 1); });
  } else if (shape == "diagonal") {
    const RegVarLaw law = parse_regvar(inn_j, inn_at);
    innovation = diagonal_innovation(law);
    coef_dim = law.dim();
  } else if (shape == "matrix") {
    const RegVarLaw law = parse_regvar(inn_j, inn_at);
    const int rows = static_cast<int>(number_at(inn_j, "rows", inn_at));
    innovation = guarded(inn_at, [&] { return innovation_from_regvar(law, rows, law.dim() / std::max(rows, 1)); });
    coef_dim = rows;
  } else {
    fail(inn_at + ".shape", "expected scalar, diagonal, matrix or pair");
  }

  PsiModel psi;
  if (kind == "bilinear-scalar") {
    if (shape != "scalar") fail(psi_at, "bilinear-scalar needs a scalar innovation");
    psi = bilinear_scalar(number_at(psi_j, "c", psi_at));
  } else if (kind == "matrix-bilinear") {
    if (shape == "pair") fail(psi_at, "matrix-bilinear does not take pair innovations");
    psi = matrix_bilinear(number_at(psi_j, "c", psi_at));
  } else if (kind == "rde-pair") {
    if (shape != "pair") fail(psi_at, "rde-pair needs a pair innovation");
    psi = rde_pair(coef_dim);
  } else {
    fail(psi_at + ".kind", "expected bilinear-scalar, matrix-bilinear or rde-pair");
  }

  Element initial = Matrix::Identity(coef_dim, coef_dim);
  if (j.contains("initial")) initial = parse_matrix(j["initial"], where + ".initial");
  if (initial.rows() != coef_dim || initial.cols() != coef_dim)
    fail(where + ".initial", "initial coefficient must be " + std::to_string(coef_dim) + "x" + std::to_string(coef_dim));

  Truncation truncation;
  if (j.contains("truncation")) {
    const Json& t = j["truncation"];
    const std::string at = where + ".truncation";
    if (t.contains("max_terms")) truncation.max_terms = static_cast<int>(number(t["max_terms"], at + ".max_terms"));
    if (t.contains("tail_tol")) truncation.tail_tol = number(t["tail_tol"], at + ".tail_tol");
  }
  return guarded(where, [&] { return SeriesModel(mode, psi, innovation, initial, truncation); });
}

}  // namespace rvlab
