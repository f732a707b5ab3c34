#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "covbayes/config.hpp"
#include "covbayes/experiment.hpp"
#include "covbayes/priors.hpp"
#include "covbayes/scenarios.hpp"
#include "covbayes/wavelet.hpp"

namespace py = pybind11;
using namespace covbayes;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (m,) or (m, d) covariate values -> points; d must match when given.
std::vector<Vec2> to_points(const Array& z, int d) {
  std::vector<Vec2> pts;
  if (z.ndim() == 1) {
    if (d != 1) throw py::value_error("expected an (m, 2) array of covariate values");
    auto r = z.unchecked<1>();
    for (py::ssize_t i = 0; i < r.shape(0); ++i) pts.push_back({r(i), 0.0});
    return pts;
  }
  if (z.ndim() != 2 || z.shape(1) != d) throw py::value_error("covariate array must have shape (m, " + std::to_string(d) + ")");
  auto r = z.unchecked<2>();
  for (py::ssize_t i = 0; i < r.shape(0); ++i) pts.push_back({r(i, 0), d == 2 ? r(i, 1) : 0.0});
  return pts;
}

py::array_t<double> points_array(const std::vector<Vec2>& pts, int d) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), static_cast<py::ssize_t>(d)});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int c = 0; c < d; ++c) w(i, c) = pts[i][c];
  return out;
}

py::array_t<double> vector_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict metrics_dict(const RunMetrics& m) {
  py::dict d;
  d["scenario"] = m.scenario;
  d["n"] = m.n;
  d["prior"] = m.prior;
  d["alpha"] = m.alpha;
  d["rel_l1"] = m.rel_l1;
  d["acc_rate"] = m.acc_rate;
  d["runtime_s"] = m.runtime_s;
  d["seed"] = m.seed;
  return d;
}

Dataset dataset_for(const ExperimentConfig& c, double n, std::size_t replicate) {
  if (!c.external()) return simulate_dataset(c, n, replicate);
  auto all = load_datasets(c);
  if (replicate >= all.size()) throw py::index_error("replicate out of range");
  return std::move(all[replicate]);
}

py::dict dataset_dict(const Dataset& data) {
  const auto& f = data.field;
  std::vector<Vec2> z;
  for (const auto& x : data.pattern.points) z.push_back(eval_covariate(f, x));
  py::array_t<double> values({static_cast<py::ssize_t>(f.grid.shape[0]), static_cast<py::ssize_t>(f.grid.shape[1]),
                              static_cast<py::ssize_t>(f.d)});
  std::copy(f.values.begin(), f.values.end(), values.mutable_data());
  py::dict d;
  d["n"] = data.n;
  d["replicate"] = data.replicate;
  d["points"] = points_array(data.pattern.points, data.pattern.window.D);
  d["covariates"] = points_array(z, f.d);
  d["window_lower"] = py::make_tuple(f.window.lower[0], f.window.lower[1]);
  d["window_upper"] = py::make_tuple(f.window.upper[0], f.window.upper[1]);
  d["field"] = values;
  d["field_spacing"] = py::make_tuple(f.grid.spacing[0], f.grid.spacing[1]);
  return d;
}

WaveletBasis basis_for(int d, const std::string& boundary) {
  if (boundary == "symmetric") return WaveletBasis::symmlet8(d, Boundary::symmetric);
  if (boundary == "periodic") return WaveletBasis::symmlet8(d, Boundary::periodic);
  throw py::value_error("boundary must be 'symmetric' or 'periodic'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "covbayes core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_json", &parse_config, py::arg("text"))
      .def_static("load", &load_config, py::arg("path"))
      .def("to_json", &serialize_config)
      .def("validate", &ExperimentConfig::validate)
      .def("apply_full_scale", [](ExperimentConfig& c) { apply_full_scale(c); })
      .def_readwrite("scenario", &ExperimentConfig::scenario)
      .def_readwrite("n_values", &ExperimentConfig::n_values)
      .def_readwrite("replicates", &ExperimentConfig::replicates)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def_readwrite("write_samples", &ExperimentConfig::write_samples)
      .def_property(
          "iterations", [](const ExperimentConfig& c) { return c.sampler.iterations; },
          [](ExperimentConfig& c, std::size_t v) { c.sampler.iterations = v; })
      .def_property(
          "burn_in", [](const ExperimentConfig& c) { return c.sampler.burn_in; },
          [](ExperimentConfig& c, std::size_t v) { c.sampler.burn_in = v; })
      .def_property_readonly("prior_labels",
                             [](const ExperimentConfig& c) {
                               std::vector<std::string> out;
                               for (const auto& p : c.priors) out.push_back(p.label());
                               return out;
                             })
      .def("__repr__", [](const ExperimentConfig& c) { return "<covbayes.Config " + c.scenario + ">"; });

  m.def(
      "ground_truth",
      [](const std::string& scenario, const Array& z) {
        const auto truth = ground_truth(parse_scenario(scenario));
        const auto pts = to_points(z, truth.d);
        std::vector<double> out;
        for (const auto& p : pts) out.push_back(truth(p));
        return vector_array(out);
      },
      py::arg("scenario"), py::arg("z"), "Evaluate a ground-truth intensity at covariate values.");

  m.def(
      "l1_norm", [](const std::string& scenario) { return l1_norm_numeric(ground_truth(parse_scenario(scenario))); },
      py::arg("scenario"));

  m.def(
      "laplace_whitening",
      [](const Array& w) {
        Array out(w.request().shape);
        const double* in = w.data();
        double* o = out.mutable_data();
        for (py::ssize_t i = 0; i < w.size(); ++i) o[i] = laplace_whitening(in[i]);
        return out;
      },
      py::arg("w"), "Map standard normal values to standard Laplace values.");

  m.def(
      "forward_dwt",
      [](const Array& samples, const std::string& boundary) {
        if (samples.ndim() != 1 && samples.ndim() != 2) throw py::value_error("samples must be 1D or square 2D");
        const int d = static_cast<int>(samples.ndim());
        if (d == 2 && samples.shape(0) != samples.shape(1)) throw py::value_error("2D samples must be square");
        GridValues g;
        g.values.assign(samples.data(), samples.data() + samples.size());
        g.per_axis = static_cast<std::size_t>(samples.shape(0));
        g.dimension = d;
        return vector_array(forward_dwt(basis_for(d, boundary), g).coeffs);
      },
      py::arg("samples"), py::arg("boundary") = "symmetric");

  m.def(
      "inverse_dwt",
      [](const Array& coeffs, int d, const std::string& boundary) {
        std::vector<double> c(coeffs.data(), coeffs.data() + coeffs.size());
        const auto g = inverse_dwt(CoefficientVector(basis_for(d, boundary), std::move(c)));
        std::vector<py::ssize_t> shape(static_cast<std::size_t>(d), static_cast<py::ssize_t>(g.per_axis));
        py::array_t<double> out(shape);
        std::copy(g.values.begin(), g.values.end(), out.mutable_data());
        return out;
      },
      py::arg("coeffs"), py::arg("d") = 1, py::arg("boundary") = "symmetric");

  m.def(
      "simulate",
      [](const ExperimentConfig& c, double n, std::size_t replicate) {
        Dataset data = [&] {
          py::gil_scoped_release release;
          return dataset_for(c, n, replicate);
        }();
        return dataset_dict(data);
      },
      py::arg("config"), py::arg("n"), py::arg("replicate") = 0,
      "Covariate field and point pattern for one replicate (loaded for external scenarios).");

  m.def(
      "fit",
      [](const ExperimentConfig& c, double n, std::size_t replicate, std::size_t prior) {
        c.validate();
        if (prior >= c.priors.size()) throw py::index_error("prior index out of range");
        FitOutput fit = [&] {
          py::gil_scoped_release release;
          const auto data = dataset_for(c, n, replicate);
          return fit_dataset(c, c.priors[prior], data, chain_seed(c, c.priors[prior], data.n, replicate));
        }();
        const auto& s = fit.summary;
        py::dict d;
        d["metrics"] = metrics_dict(fit.metrics);
        d["z"] = points_array(s.grid.points, s.grid.d);
        d["mean"] = vector_array(s.mean);
        d["lower"] = vector_array(s.lower);
        d["upper"] = vector_array(s.upper);
        d["level"] = s.level;
        d["n_samples"] = fit.chain.samples.size();
        d["final_b"] = fit.chain.final_b;
        d["alpha_samples"] = vector_array(fit.chain.sample_alpha);
        return d;
      },
      py::arg("config"), py::arg("n"), py::arg("replicate") = 0, py::arg("prior") = 0,
      "Run one chain and return the posterior summary on the evaluation grid.");

  m.def(
      "run_fit",
      [](const ExperimentConfig& c) {
        std::vector<RunMetrics> ms;
        {
          py::gil_scoped_release release;
          ms = run_fit(c);
        }
        py::list out;
        for (const auto& x : ms) out.append(metrics_dict(x));
        return out;
      },
      py::arg("config"), "Full fit run writing outputs under config.output_dir.");

  m.def(
      "kernel_estimate",
      [](const ExperimentConfig& c, double n, std::size_t replicate, const Array& z) {
        const auto data = dataset_for(c, n, replicate);
        const KernelEstimate k(data.pattern, data.field);
        std::vector<double> out;
        for (const auto& p : to_points(z, data.field.d)) out.push_back(k(p));
        return vector_array(out);
      },
      py::arg("config"), py::arg("n"), py::arg("replicate"), py::arg("z"),
      "Covariate-space kernel intensity estimate evaluated at z.");
}
