#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "rvlab/config.hpp"
#include "rvlab/errors.hpp"
#include "rvlab/estimators.hpp"
#include "rvlab/experiment.hpp"
#include "rvlab/markov.hpp"
#include "rvlab/random.hpp"
#include "rvlab/rv_core.hpp"

namespace py = pybind11;
using namespace rvlab;

namespace {

Json parse_json(const std::string& text) { return Json::parse(text); }

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

EmpiricalAngularMeasure measure_from(const Matrix& directions, const std::vector<double>& weights) {
  EmpiricalAngularMeasure m;
  m.directions = directions;
  m.weights = weights.empty() ? std::vector<double>(static_cast<std::size_t>(directions.cols()),
                                                    1.0 / static_cast<double>(directions.cols()))
                              : weights;
  m.validate();
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Heavy-tailed Markov chain and random-coefficient series simulation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DegenerateSample>(m, "DegenerateSample", PyExc_ArithmeticError);
  py::register_exception<ZeroMass>(m, "ZeroMass", PyExc_ArithmeticError);
  py::register_exception<HeavyMoment>(m, "HeavyMoment", PyExc_ArithmeticError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<RunError>(m, "RunError", PyExc_RuntimeError);

  m.def("sample_pareto", [](double alpha, double u) { return sample_pareto(ParetoLaw(alpha), u); },
        py::arg("alpha"), py::arg("u"), "Inverse-CDF Pareto draw u^(-1/alpha).");

  m.def(
      "pareto_sample",
      [](double alpha, std::size_t n, std::uint64_t seed) {
        Stream s(seed);
        Eigen::VectorXd out(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = sample_pareto(ParetoLaw(alpha), s);
        return out;
      },
      py::arg("alpha"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "hill",
      [](const std::vector<double>& x, int k) {
        const auto h = hill(x, k);
        return py::make_tuple(h.alpha_hat, h.se);
      },
      py::arg("magnitudes"), py::arg("k"), "Hill estimate and its standard error.");

  m.def(
      "energy_distance",
      [](const Matrix& a, const Matrix& b, const std::vector<double>& wa, const std::vector<double>& wb) {
        return energy_distance(measure_from(a, wa), measure_from(b, wb));
      },
      py::arg("a"), py::arg("b"), py::arg("weights_a") = std::vector<double>{},
      py::arg("weights_b") = std::vector<double>{}, "Energy distance between atom sets given as d x n matrices.");

  m.def(
      "rde_stationary",
      [](const std::string& rde_json, std::size_t n, std::size_t burn_in, std::size_t spacing, std::uint64_t seed) {
        const RdeModel rde = parse_rde(parse_json(rde_json), "rde");
        Stream s(seed);
        StationarySampler sampler{rde.as_markov(), burn_in, spacing, Vector::Zero(rde.dim)};
        const auto states = stationary_samples(sampler, n, s);
        Matrix out(static_cast<Eigen::Index>(n), rde.dim);
        for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = states[i].transpose();
        return out;
      },
      py::arg("rde_json"), py::arg("n"), py::arg("burn_in") = 1000, py::arg("spacing") = 10, py::arg("seed") = 0,
      "States of one long RDE chain, one per row; the model uses the config file's rde syntax.");

  m.def(
      "validate_config", [](const std::string& text) { return validate_config(parse_json(text)); },
      py::arg("config_json"), "Every violation in a configuration document.");

  m.def(
      "run",
      [](const std::string& path, const std::string& output_dir, bool resume) {
        RunOptions o;
        o.output_dir = output_dir;
        o.resume = resume;
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(load_config(path), o);
        }
        return to_python(r.to_json());
      },
      py::arg("config_path"), py::arg("output_dir") = "", py::arg("resume") = false,
      "Runs a configuration file and returns its report.");

  m.def(
      "load_report", [](const std::string& path) { return to_python(load_report(path).to_json()); }, py::arg("path"));

  m.def(
      "compare",
      [](const std::string& a, const std::string& b, double n_se) {
        const auto c = compare_reports(load_report(a), load_report(b), n_se);
        py::list rows;
        for (const auto& r : c.rows) {
          py::dict d;
          d["name"] = r.name;
          d["a"] = r.a;
          d["b"] = r.b;
          d["diff"] = r.diff;
          d["se"] = r.se;
          d["flagged"] = r.flagged;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["only_in_a"] = c.only_in_a;
        out["only_in_b"] = c.only_in_b;
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("n_se") = 3.0);

  m.def("output_hashes", &output_hashes, py::arg("directory"));
}
