#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rgheston/errors.hpp"
#include "rgheston/experiments.hpp"
#include "rgheston/extensions.hpp"
#include "rgheston/random_grids.hpp"
#include "rgheston/reference.hpp"
#include "rgheston/sampling.hpp"

namespace py = pybind11;
using namespace rgheston;

namespace {

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["n"] = r.n;
  d["order"] = r.order;
  d["estimate"] = r.estimate;
  d["half_width"] = r.half_width;
  d["M1"] = r.M1;
  d["M2"] = r.M2;
  d["sigma2_sq"] = r.final_stats.sigma2_sq;
  d["V"] = r.final_stats.V;
  d["Gamma"] = r.final_stats.Gamma;
  d["wall_ms"] = r.wall_ms;
  return d;
}

EstimatorConfig make_cfg(double T, int n, int order, const std::string& coupling, double eps, std::uint64_t seed,
                         std::uint64_t pilot, unsigned workers, std::optional<std::uint64_t> M1,
                         std::optional<std::uint64_t> M2) {
  EstimatorConfig c;
  c.T = T;
  c.n = n;
  c.order = order;
  c.coupling = parse_coupling(coupling);
  c.epsilon = eps;
  c.seed = seed;
  c.pilot_size = pilot;
  c.workers = workers;
  c.fixed_M1 = M1;
  c.fixed_M2 = M2;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random-grid Monte Carlo for the log-Heston model";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<AdmissibilityError>(m, "AdmissibilityError", PyExc_ValueError);
  py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_RuntimeError);

  py::class_<HestonParams>(m, "HestonParams")
      .def(py::init([](double a, double b, double sigma, double rho, double r) {
             return HestonParams{a, b, sigma, rho, r};
           }),
           py::arg("a"), py::arg("b"), py::arg("sigma"), py::arg("rho"), py::arg("r") = 0.0)
      .def_readwrite("a", &HestonParams::a)
      .def_readwrite("b", &HestonParams::b)
      .def_readwrite("sigma", &HestonParams::sigma)
      .def_readwrite("rho", &HestonParams::rho)
      .def_readwrite("r", &HestonParams::r)
      .def("nv_admissible", &HestonParams::nv_admissible);

  m.def(
      "validate_params",
      [](const HestonParams& p, const std::string& scheme) {
        const ValidationReport rep = validate_params(p, parse_scheme(scheme));
        return py::make_tuple(rep.ok, rep.violated);
      },
      py::arg("params"), py::arg("scheme"), "Returns (ok, violated condition).");

  m.def(
      "estimate",
      [](const HestonParams& p, double spot, double y0, double strike, const std::string& payoff,
         const std::string& scheme, const std::string& coupling, double T, int n, int order, double eps,
         std::uint64_t seed, std::uint64_t pilot, unsigned workers, std::optional<std::uint64_t> M1,
         std::optional<std::uint64_t> M2) {
        const EstimatorConfig cfg = make_cfg(T, n, order, coupling, eps, seed, pilot, workers, M1, M2);
        RunReport r;
        {
          py::gil_scoped_release release;
          r = estimate(p, parse_scheme(scheme), {std::log(spot), y0}, cfg,
                       Payoff{parse_payoff(payoff), strike, {}});
        }
        return report_dict(r);
      },
      py::arg("params"), py::arg("spot"), py::arg("y0"), py::arg("strike"), py::arg("payoff") = "european_put",
      py::arg("scheme") = "NV", py::arg("coupling") = "Standard", py::arg("T") = 1.0, py::arg("n") = 2,
      py::arg("order") = 2, py::arg("eps") = 1e-2, py::arg("seed") = 1, py::arg("pilot") = 10'000,
      py::arg("workers") = 0, py::arg("M1") = py::none(), py::arg("M2") = py::none());

  m.def(
      "tune_sample_sizes",
      [](double sigma2_sq, double V, double Gamma, double eps) {
        const SampleSizes s = tune_sample_sizes({sigma2_sq, V, Gamma, 0}, eps);
        return py::make_tuple(s.M1, s.M2, s.clamped);
      },
      py::arg("sigma2_sq"), py::arg("V"), py::arg("Gamma"), py::arg("eps"));

  m.def(
      "sample_kappa",
      [](int n, std::uint64_t seed, std::uint64_t count) {
        std::vector<int> out;
        out.reserve(count);
        RngStream rng(seed, 0);
        for (std::uint64_t i = 0; i < count; ++i) out.push_back(sample_kappa(n, rng));
        return out;
      },
      py::arg("n"), py::arg("seed"), py::arg("count"));

  m.def(
      "european_price",
      [](const HestonParams& p, double spot, double y0, double T, double K, const std::string& kind) {
        OptionKind k;
        if (kind == "put") k = OptionKind::put;
        else if (kind == "call") k = OptionKind::call;
        else throw ConfigError("kind must be 'put' or 'call'");
        const PriceResult r = european_price_cf(p, {std::log(spot), y0}, T, K, k);
        return py::make_tuple(r.price, r.error_estimate);
      },
      py::arg("params"), py::arg("spot"), py::arg("y0"), py::arg("T"), py::arg("K"), py::arg("kind") = "put");

  m.def(
      "char_fn",
      [](std::complex<double> u, const HestonParams& p, double T, double x0, double y0) {
        return heston_char_fn(u, p, T, x0, y0);
      },
      py::arg("u"), py::arg("params"), py::arg("T"), py::arg("x0"), py::arg("y0"));

  m.def(
      "cir_moments",
      [](double y0, double t, double a, double b, double sigma) {
        const CirMoments c = cir_moments(y0, t, a, b, sigma);
        return py::make_tuple(c.mean, c.variance);
      },
      py::arg("y0"), py::arg("t"), py::arg("a"), py::arg("b"), py::arg("sigma"));

  m.def(
      "regress_slope",
      [](const std::vector<std::pair<double, double>>& points) {
        const SlopeFit f = regress_slope(points);
        return py::make_tuple(f.slope, f.intercept, f.warnings);
      },
      py::arg("points"));

  m.def("preset_names", &preset_names);

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& settings) {
        const ExperimentConfig cfg = config_from_settings(settings);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg);
        }
        py::list rows;
        for (const auto& r : res.rows) {
          py::dict d;
          d["label"] = r.label;
          d["order"] = r.order;
          d["n"] = r.n;
          d["estimate"] = r.estimate;
          d["half_width"] = r.half_width;
          d["M1"] = r.M1;
          d["M2"] = r.M2;
          d["sigma2_sq"] = r.sigma2_sq;
          d["V_n"] = r.V_n;
          d["Gamma_n"] = r.Gamma_n;
          d["wall_ms"] = r.wall_ms;
          rows.append(d);
        }
        py::dict slopes;
        for (const auto& [order, fit] : res.summary.slopes) slopes[py::int_(order)] = fit.slope;
        py::dict out;
        out["rows"] = rows;
        out["slopes"] = slopes;
        out["reference"] = res.summary.reference ? py::object(py::float_(*res.summary.reference)) : py::none();
        out["timing_ratio"] = res.summary.timing_ratio;
        out["notes"] = res.summary.notes;
        out["csv"] = [&] {
          std::string s = csv_header() + "\n";
          for (const auto& r : res.rows) s += to_csv_line(r) + "\n";
          return s;
        }();
        return out;
      },
      py::arg("settings"), "Runs an experiment from config key/value pairs (a 'preset' key expands first).");

  m.attr("__version__") = version_string();
}
