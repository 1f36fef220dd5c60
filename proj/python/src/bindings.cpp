#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "doilab/errors.hpp"
#include "doilab/harness.hpp"

namespace py = pybind11;
using namespace doilab;

namespace {

// Directors as an array of shape (sites, 3) or (n, n, 3).
DirectorField director_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                                  double length) {
  const int nd = static_cast<int>(a.ndim());
  if ((nd != 2 && nd != 3) || a.shape(nd - 1) != 3) throw ConfigError("directors must have shape (n, 3) or (n, n, 3)");
  if (nd == 3 && a.shape(0) != a.shape(1)) throw ConfigError("two-dimensional grids must be square");
  DirectorField f(TorusGrid(nd - 1, length, static_cast<int>(a.shape(0))));
  const double* p = a.data();
  for (int s = 0; s < f.torus.size(); ++s) f.n[s] = Vec3(p[3 * s], p[3 * s + 1], p[3 * s + 2]);
  return f;
}

py::array_t<double> director_to_array(const DirectorField& f) {
  std::vector<py::ssize_t> shape;
  for (int k = 0; k < f.torus.dim(); ++k) shape.push_back(f.torus.n());
  shape.push_back(3);
  py::array_t<double> out(shape);
  double* p = out.mutable_data();
  for (int s = 0; s < f.torus.size(); ++s)
    for (int c = 0; c < 3; ++c) p[3 * s + c] = f.n[s][c];
  return out;
}

}  // namespace

PYBIND11_MODULE(_doilab, m) {
  m.doc() = "Doi-Onsager kinetic solver and its small-Deborah limit";

  static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical.ptr(), e.what());
    }
  });

  m.def("s2", &s2, py::arg("eta"), "Order parameter of exp(eta (m.n)^2).");
  m.def("partition_function", &partition_function, py::arg("eta"));
  m.def("solve_eta", &solve_eta, py::arg("alpha"), "All roots of eta = alpha s2(eta), ascending.");
  m.def("alpha_star", &alpha_star, "Smallest alpha with a nematic root.");

  py::class_<EquilibriumParams>(m, "EquilibriumParams")
      .def_readonly("alpha", &EquilibriumParams::alpha)
      .def_readonly("eta", &EquilibriumParams::eta)
      .def_readonly("S2", &EquilibriumParams::S2)
      .def_readonly("Z", &EquilibriumParams::Z)
      .def_readonly("E0", &EquilibriumParams::E0);
  m.def("equilibrium_params", &equilibrium_params, py::arg("alpha"));

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_static("gaussian", &KernelSpec::gaussian, py::arg("a"), py::arg("d"), py::arg("margin") = 0.01)
      .def_readonly("a", &KernelSpec::a)
      .def_readonly("d", &KernelSpec::d)
      .def_readonly("mu", &KernelSpec::mu)
      .def_readonly("c0", &KernelSpec::c0);

  py::class_<LimitCoefficients>(m, "LimitCoefficients")
      .def_readonly("alpha", &LimitCoefficients::alpha)
      .def_readonly("eta", &LimitCoefficients::eta)
      .def_readonly("S2", &LimitCoefficients::S2)
      .def_readonly("Z", &LimitCoefficients::Z)
      .def_readonly("E0", &LimitCoefficients::E0)
      .def_readonly("gamma", &LimitCoefficients::gamma)
      .def_readonly("mu", &LimitCoefficients::mu)
      .def_readonly("Lambda", &LimitCoefficients::Lambda);
  m.def("gamma_constant", py::overload_cast<const EquilibriumParams&>(&gamma_constant), py::arg("params"));
  m.def("lambda_coefficient", py::overload_cast<const EquilibriumParams&, const KernelSpec&>(&lambda_coefficient),
        py::arg("params"), py::arg("kernel"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("dim", &ExperimentConfig::dim)
      .def_readwrite("length", &ExperimentConfig::length)
      .def_readwrite("n", &ExperimentConfig::n)
      .def_readwrite("lmax", &ExperimentConfig::lmax)
      .def_readwrite("quadrature_factor", &ExperimentConfig::quadrature_factor)
      .def_readwrite("alpha", &ExperimentConfig::alpha)
      .def_readwrite("kernel_a", &ExperimentConfig::kernel_a)
      .def_readwrite("epsilons", &ExperimentConfig::epsilons)
      .def_readwrite("cfl", &ExperimentConfig::cfl)
      .def_readwrite("t_final", &ExperimentConfig::t_final)
      .def_readwrite("samples", &ExperimentConfig::samples)
      .def_readwrite("snapshot_stride", &ExperimentConfig::snapshot_stride)
      .def_readwrite("director_amplitude", &ExperimentConfig::director_amplitude)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def("__str__", &format_config);
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<ConvergenceRow>(m, "ConvergenceRow")
      .def_readonly("eps", &ConvergenceRow::eps)
      .def_readonly("status", &ConvergenceRow::status)
      .def_readonly("sup_error", &ConvergenceRow::sup_error)
      .def_readonly("final_error", &ConvergenceRow::final_error)
      .def_readonly("sup_error_solvability", &ConvergenceRow::sup_error_solvability)
      .def_readonly("final_error_solvability", &ConvergenceRow::final_error_solvability)
      .def_readonly("initial_modulated", &ConvergenceRow::initial_modulated)
      .def_readonly("max_modulated", &ConvergenceRow::max_modulated)
      .def_readonly("total_dissipation", &ConvergenceRow::total_dissipation)
      .def_readonly("steps", &ConvergenceRow::steps);
  py::class_<ConvergenceReport>(m, "ConvergenceReport")
      .def_readonly("coefficients", &ConvergenceReport::coefficients)
      .def_readonly("discrete_order", &ConvergenceReport::discrete_order)
      .def_readonly("solvability_lambda", &ConvergenceReport::solvability_lambda)
      .def_readonly("rows", &ConvergenceReport::rows);
  m.def("epsilon_sweep", &epsilon_sweep, py::arg("config"), py::call_guard<py::gil_scoped_release>());

  py::class_<BifurcationRow>(m, "BifurcationRow")
      .def_readonly("alpha", &BifurcationRow::alpha)
      .def_readonly("eta", &BifurcationRow::eta)
      .def_readonly("s2", &BifurcationRow::s2)
      .def_readonly("branch", &BifurcationRow::branch);
  m.def("bifurcation_table", &bifurcation_table, py::arg("alpha_min"), py::arg("alpha_max"), py::arg("count"));

  m.def(
      "initial_director",
      [](const ExperimentConfig& cfg) { return director_to_array(initial_director(cfg)); }, py::arg("config"));
  m.def(
      "hmhf",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& n, double length, double dt, int steps,
         double Lambda) {
        auto f = director_from_array(n, length);
        for (int k = 0; k < steps; ++k) hmhf_step(f, dt, Lambda);
        return director_to_array(f);
      },
      py::arg("directors"), py::arg("length"), py::arg("dt"), py::arg("steps"), py::arg("Lambda"),
      "Explicit projection steps of the harmonic map heat flow on a periodic grid.");
  m.def(
      "hmhf_stable_dt", [](int dim, double length, int n, double Lambda) {
        return hmhf_stable_dt(TorusGrid(dim, length, n), Lambda);
      },
      py::arg("dim"), py::arg("length"), py::arg("n"), py::arg("Lambda"));
  m.def(
      "dirichlet_energy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& n, double length) {
        return dirichlet_energy(director_from_array(n, length));
      },
      py::arg("directors"), py::arg("length"));
}
