#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pic/backends.hpp"
#include "pic/diagnostics.hpp"

namespace py = pybind11;
using namespace pic;

namespace {

SimConfig to_config(const py::object& spec) {
  if (py::isinstance<py::str>(spec)) return resolve_scenario(spec.cast<std::string>());
  const auto json = py::module_::import("json").attr("dumps")(spec).cast<std::string>();
  return parse_config(json);
}

py::dict config_dict(const SimConfig& cfg) {
  return py::module_::import("json").attr("loads")(config_to_json(cfg));
}

py::array_t<float> to_array(const FieldReport& r) {
  py::array_t<float> a({r.ny, r.nx});
  std::copy(r.data.begin(), r.data.end(), a.mutable_data());
  return a;
}

FieldReport from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
                       Quantity q) {
  if (a.ndim() != 2) throw std::invalid_argument("field map must be 2-D (ny, nx)");
  FieldReport r;
  r.quantity = q;
  r.ny = static_cast<int>(a.shape(0));
  r.nx = static_cast<int>(a.shape(1));
  r.data.assign(a.data(), a.data() + a.size());
  return r;
}

py::dict energy_dict(const EnergyReport& e) {
  py::dict d;
  d["iter"] = e.iter;
  d["field_energy"] = e.field_energy;
  d["electric_energy"] = e.electric_energy;
  d["magnetic_energy"] = e.magnetic_energy;
  d["kinetic_energy"] = e.kinetic_energy;
  py::dict species;
  for (const auto& s : e.species) species[py::str(s.name)] = s.kinetic;
  d["species"] = species;
  return d;
}

class Simulation {
 public:
  Simulation(const py::object& spec, int regions) : state_(make_state(to_config(spec), regions)) {}

  void run(int steps, const std::string& backend, int workers) {
    const auto kind = parse_backend(backend);
    if (workers < 1) workers = tasking::default_worker_count();
    py::gil_scoped_release release;
    run_backend(state_, steps, kind, workers);
  }

  py::array_t<float> field(const std::string& name) const {
    const auto [q, sp] = parse_quantity(name);
    return to_array(field_report(state_, q, sp));
  }

  void dump(const std::string& name, const std::string& path) const {
    const auto [q, sp] = parse_quantity(name);
    dump_field(state_, q, path, sp);
  }

  const SimState& state() const { return state_; }

 private:
  SimState state_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "2D3V electromagnetic particle-in-cell simulator with task-based backends";

  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", PyExc_ValueError);
  py::register_exception<UnknownBackend>(m, "UnknownBackend", PyExc_ValueError);
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> config_error;
  config_error.call_once_and_store_result(
      [&] { return py::exception<ConfigError>(m, "ConfigError", PyExc_ValueError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      const auto& type = config_error.get_stored();
      py::object err = type(e.what());
      err.attr("field") = e.field();
      PyErr_SetObject(type.ptr(), err.ptr());
    }
  });

  m.def("scenarios", &builtin_scenario_names, "Names of the built-in scenarios.");
  m.def("backends", [] {
    std::vector<std::string> names;
    for (auto k : all_backends()) names.emplace_back(backend_name(k));
    return names;
  });
  m.def("load_scenario", [](const py::object& spec) { return config_dict(to_config(spec)); },
        py::arg("spec"), "Scenario (name, path or dict) as a validated-format dict.");
  m.def("validate", [](const py::object& spec) { return config_dict(validate_config(to_config(spec))); },
        py::arg("spec"), "Validate a scenario; raises ConfigError.");
  m.def("cfl_limit", [](const py::object& spec) { return to_config(spec).cfl_limit(); });

  m.def("compare", [](const py::array_t<float>& a, const py::array_t<float>& b) {
    const auto d = compare_field_maps(from_array(a, Quantity::ex), from_array(b, Quantity::ex));
    return py::make_tuple(d.max_rel, d.l2_rel);
  }, py::arg("reference"), py::arg("other"), "(max_rel, l2_rel) of two field maps.");
  m.def("compare_dumps", [](const std::string& a, const std::string& b) {
    const auto d = compare_field_maps(read_dump(a), read_dump(b));
    return py::make_tuple(d.max_rel, d.l2_rel);
  });
  m.def("read_dump", [](const std::string& path) {
    const auto r = read_dump(path);
    return py::make_tuple(quantity_name(r.quantity, r.species), r.iter, to_array(r));
  }, py::arg("path"), "(quantity, iter, array) from a dump file.");
  m.def("write_dump", [](const std::string& path, const std::string& quantity, int iter,
                         const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    const auto [q, sp] = parse_quantity(quantity);
    auto r = from_array(a, q);
    r.species = sp;
    r.iter = iter;
    write_dump(r, path);
  }, py::arg("path"), py::arg("quantity"), py::arg("iter"), py::arg("data"));

  py::class_<Simulation>(m, "Simulation")
      .def(py::init<const py::object&, int>(), py::arg("scenario"), py::arg("regions") = 0)
      .def("run", &Simulation::run, py::arg("steps"), py::arg("backend") = "serial",
           py::arg("workers") = 0)
      .def("field", &Simulation::field, py::arg("quantity"),
           "Stitched (ny, nx) map of Ex..Jz or rho<k>.")
      .def("dump", &Simulation::dump, py::arg("quantity"), py::arg("path"))
      .def("energy", [](const Simulation& s) { return energy_dict(energy_report(s.state())); })
      .def_property_readonly("iter", [](const Simulation& s) { return s.state().iter; })
      .def_property_readonly("moves", [](const Simulation& s) { return s.state().moves; })
      .def_property_readonly("regions", [](const Simulation& s) { return s.state().n_regions(); })
      .def_property_readonly("particle_count",
                             [](const Simulation& s) { return s.state().particle_count(); })
      .def_property_readonly("config", [](const Simulation& s) { return config_dict(s.state().cfg); });
}
