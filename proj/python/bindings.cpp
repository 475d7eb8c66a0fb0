#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mesoclt/ensemble.hpp"
#include "mesoclt/errors.hpp"
#include "mesoclt/gp_sampler.hpp"
#include "mesoclt/harness.hpp"
#include "mesoclt/hs_calculus.hpp"
#include "mesoclt/spectral.hpp"
#include "mesoclt/stats.hpp"
#include "mesoclt/test_function.hpp"
#include "mesoclt/theory.hpp"

namespace py = pybind11;
using namespace mesoclt;

namespace {

TestFunction resolve(const py::object& f) {
  if (py::isinstance<py::str>(f)) return catalog::by_label(f.cast<std::string>());
  return f.cast<TestFunction>();
}

Spectrum spectrum_from(const std::vector<double>& eigs) {
  Spectrum s;
  s.eigenvalues = eigs;
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
  return s;
}

}  // namespace

PYBIND11_MODULE(_mesoclt, m) {
  m.doc() = "Mesoscopic linear statistics of Wigner matrices";
  m.attr("__version__") = MESOCLT_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

  py::enum_<SymmetryClass>(m, "SymmetryClass")
      .value("real_symmetric", SymmetryClass::real_symmetric)
      .value("complex_hermitian", SymmetryClass::complex_hermitian);
  py::enum_<EntryLaw>(m, "EntryLaw")
      .value("gaussian", EntryLaw::gaussian)
      .value("rademacher", EntryLaw::rademacher)
      .value("uniform", EntryLaw::uniform)
      .value("heavy_tail", EntryLaw::heavy_tail);
  py::enum_<ExtensionVariant>(m, "ExtensionVariant")
      .value("first_order", ExtensionVariant::first_order)
      .value("derivative_form", ExtensionVariant::derivative_form);

  py::class_<EnsembleSpec>(m, "EnsembleSpec")
      .def(py::init([](SymmetryClass c, EntryLaw law, int n, std::optional<double> zeta, double a,
                       std::uint64_t seed) {
             EnsembleSpec s{c, law, n, zeta, a, seed};
             s.validate();
             return s;
           }),
           py::arg("symmetry_class") = SymmetryClass::real_symmetric, py::arg("entry_law") = EntryLaw::gaussian,
           py::arg("dimension") = 64, py::arg("diagonal_variance") = py::none(),
           py::arg("heavy_tail_exponent") = 4.5, py::arg("master_seed") = 0)
      .def_static("goe", &EnsembleSpec::goe, py::arg("n"), py::arg("seed") = 0)
      .def_static("gue", &EnsembleSpec::gue, py::arg("n"), py::arg("seed") = 0)
      .def_readwrite("symmetry_class", &EnsembleSpec::symmetry_class)
      .def_readwrite("entry_law", &EnsembleSpec::entry_law)
      .def_readwrite("dimension", &EnsembleSpec::dimension)
      .def_readwrite("diagonal_variance", &EnsembleSpec::diagonal_variance)
      .def_readwrite("heavy_tail_exponent", &EnsembleSpec::heavy_tail_exponent)
      .def_readwrite("master_seed", &EnsembleSpec::master_seed)
      .def("zeta", &EnsembleSpec::zeta)
      .def("validate", &EnsembleSpec::validate);

  m.def(
      "sample_matrix",
      [](const EnsembleSpec& spec, std::uint64_t index) -> py::object {
        const auto s = sample_matrix(spec, index);
        if (s.is_real()) return py::cast(Eigen::MatrixXd(s.real()));
        return py::cast(Eigen::MatrixXcd(s.complex()));
      },
      py::arg("spec"), py::arg("sample_index"), "Dense H for one sample (real or complex ndarray).");
  m.def(
      "eigenvalues",
      [](const EnsembleSpec& spec, std::uint64_t index) { return eigenvalues(sample_matrix(spec, index)).eigenvalues; },
      py::arg("spec"), py::arg("sample_index"));
  m.def(
      "eigenvalues_of",
      [](const Eigen::MatrixXcd& h) {
        bool real = (h.imag().array() == 0.0).all();
        if (real) return eigenvalues(MatrixSample(Eigen::MatrixXd(h.real()))).eigenvalues;
        return eigenvalues(MatrixSample(Eigen::MatrixXcd(h))).eigenvalues;
      },
      py::arg("h"), "Eigenvalues of an exactly Hermitian matrix.");
  m.def(
      "trace_resolvent", [](const std::vector<double>& eigs, cplx z) { return trace_resolvent(spectrum_from(eigs), z); },
      py::arg("eigenvalues"), py::arg("z"));
  m.def(
      "linear_statistic",
      [](const std::vector<double>& eigs, const py::object& f, double e, double eta) {
        return linear_statistic(spectrum_from(eigs), resolve(f), e, eta);
      },
      py::arg("eigenvalues"), py::arg("f"), py::arg("energy"), py::arg("eta"));

  py::class_<TestFunction>(m, "TestFunction")
      .def_readonly("label", &TestFunction::label)
      .def("__call__", &TestFunction::operator())
      .def("derivative", [](const TestFunction& f, double x) { return f.derivative(x); })
      .def("dilated", &TestFunction::dilated)
      .def("is_c2", &TestFunction::is_c2)
      .def("has_fourier", &TestFunction::has_fourier);
  m.def("test_function", &catalog::by_label, py::arg("label"), "Catalog lookup, e.g. 'cauchy' or 'gauss@2'.");

  m.def("semicircle_density", &semicircle_density);
  m.def("stieltjes_m", &stieltjes_m, py::arg("z"));
  m.def(
      "resolvent_covariance",
      [](cplx b1, cplx b2) {
        const auto c = resolvent_covariance(b1, b2);
        return py::make_tuple(c.cov, c.pseudo_cov);
      },
      py::arg("b1"), py::arg("b2"), "(E Y(b1) conj Y(b2), E Y(b1) Y(b2)) of the limiting process.");
  m.def(
      "h_half_covariance",
      [](const py::object& f, const py::object& g, double tol) {
        return h_half_covariance(resolve(f), resolve(g), QuadTolerance{tol});
      },
      py::arg("f"), py::arg("g"), py::arg("abs_tol") = 1e-8);
  m.def(
      "h_half_variance_fourier", [](const py::object& f) { return h_half_variance_fourier(resolve(f)); },
      py::arg("f"));
  m.def(
      "centering_integral",
      [](const py::object& f, double e, double eta, int n) { return centering_integral(resolve(f), e, eta, n); },
      py::arg("f"), py::arg("energy"), py::arg("eta"), py::arg("n"));
  m.def("rate_c0", &rate_c0, py::arg("alpha"));
  m.def("predicted_mixed_moment", &predicted_mixed_moment, py::arg("n"), py::arg("m"), py::arg("alpha"),
        py::arg("dimension"));

  m.def(
      "sample_Y",
      [](const std::vector<cplx>& b, int num_samples, std::uint64_t seed, int k) {
        return sample_Y(b, GPConfig{k, seed, 1e-6}, num_samples);
      },
      py::arg("b_points"), py::arg("num_samples"), py::arg("seed") = 0, py::arg("truncation_K") = 0);
  m.def(
      "sample_Z",
      [](const std::vector<py::object>& fs, int num_samples, std::uint64_t seed) {
        std::vector<TestFunction> list;
        for (const auto& f : fs) list.push_back(resolve(f));
        return sample_Z(list, num_samples, seed);
      },
      py::arg("f_list"), py::arg("num_samples"), py::arg("seed") = 0);

  m.def(
      "hs_reconstruct_scalar",
      [](const py::object& f, double lambda, double tol, ExtensionVariant v, double scale) {
        return hs_reconstruct_scalar(AlmostAnalyticExtension(v, resolve(f), scale), lambda, tol);
      },
      py::arg("f"), py::arg("lam"), py::arg("quad_tol") = 1e-8, py::arg("variant") = ExtensionVariant::first_order,
      py::arg("cutoff_scale") = 1.0);
  m.def(
      "hs_trace",
      [](const std::vector<double>& eigs, const py::object& f, double e, double eta, double sigma, double tol,
         ExtensionVariant v) { return hs_trace(spectrum_from(eigs), resolve(f), e, eta, sigma, tol, v); },
      py::arg("eigenvalues"), py::arg("f"), py::arg("energy"), py::arg("eta"), py::arg("sigma") = 0.0,
      py::arg("quad_tol") = 1e-8, py::arg("variant") = ExtensionVariant::first_order);

  m.def(
      "cumulants_from_moments",
      [](const std::vector<double>& moments) { return cumulants_from_moments(moments).values; },
      py::arg("moments"));
  m.def(
      "ks_normality_test",
      [](const std::vector<double>& x, double sd) {
        const auto r = ks_normality_test(x, sd);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("samples"), py::arg("target_sd"));

  m.def(
      "_run_summary",
      [](const std::map<std::string, std::string>& flat) {
        const auto cfg = config_from_map(flat);
        py::gil_scoped_release nogil;
        return run_summary(cfg).dump();
      },
      py::arg("config"));
  m.def(
      "run",
      [](const std::map<std::string, std::string>& flat) {
        const auto cfg = config_from_map(flat);
        py::gil_scoped_release nogil;
        return run(cfg).to_json().dump();
      },
      py::arg("config"), "Run an experiment and write its output files; returns the manifest as JSON text.");
}
