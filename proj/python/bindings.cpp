#include "surftrap/designer.hpp"
#include "surftrap/efield.hpp"
#include "surftrap/geometry.hpp"
#include "surftrap/io.hpp"
#include "surftrap/pseudo.hpp"
#include "surftrap/sensing.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace surftrap;

namespace {

py::dict characterization_dict(const TrapCharacterization& c) {
  py::dict d;
  d["nil_position_um"] = c.nil_position_um;
  d["minimum_um"] = c.minimum_um;
  d["ion_height_um"] = c.ion_height_um;
  d["trap_depth_eV"] = c.trap_depth_eV;
  d["escape_point_um"] = c.escape_point_um;
  d["escape_refined"] = c.escape_refined;
  d["secular_freqs_hz"] = c.secular_freqs_hz;
  d["principal_axes"] = c.principal_axes;
  d["rotation_deg"] = c.rotation_deg;
  d["rotation_degenerate"] = c.rotation_degenerate;
  d["axially_confined"] = c.axially_confined;
  return d;
}

void bind_errors(py::module_& m) {
  // Translators registered later are tried first, so the base goes first.
  const auto& base = py::register_exception<Error>(m, "SurftrapError", PyExc_RuntimeError);
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<OutOfDomain>(m, "OutOfDomain", base.ptr());
  py::register_exception<SearchFailed>(m, "SearchFailed", base.ptr());
  py::register_exception<NoEscapePoint>(m, "NoEscapePoint", base.ptr());
  py::register_exception<NotAMinimum>(m, "NotAMinimum", base.ptr());
  py::register_exception<Infeasible>(m, "Infeasible", base.ptr());
  py::register_exception<ZeroBaseline>(m, "ZeroBaseline", base.ptr());
}

void bind_geometry(py::module_& m) {
  py::enum_<ElectrodeRole>(m, "ElectrodeRole")
      .value("RF", ElectrodeRole::RF)
      .value("DC", ElectrodeRole::DC)
      .value("CenterControl", ElectrodeRole::CenterControl)
      .value("Ground", ElectrodeRole::Ground);

  py::class_<RectPatch>(m, "RectPatch")
      .def(py::init([](std::string id, ElectrodeRole role, double x0, double x1, double z0, double z1) {
             return RectPatch{std::move(id), role, x0, x1, z0, z1};
           }),
           py::arg("id"), py::arg("role"), py::arg("x_min"), py::arg("x_max"), py::arg("z_min"), py::arg("z_max"))
      .def_readwrite("id", &RectPatch::id)
      .def_readwrite("role", &RectPatch::role)
      .def_readwrite("x_min", &RectPatch::x_min)
      .def_readwrite("x_max", &RectPatch::x_max)
      .def_readwrite("z_min", &RectPatch::z_min)
      .def_readwrite("z_max", &RectPatch::z_max)
      .def("__repr__", [](const RectPatch& p) {
        return "<RectPatch " + p.id + " " + std::string(to_string(p.role)) + ">";
      });

  py::class_<LayoutParams>(m, "LayoutParams")
      .def(py::init<>())
      .def_readwrite("a", &LayoutParams::a)
      .def_readwrite("b", &LayoutParams::b)
      .def_readwrite("c", &LayoutParams::c)
      .def_readwrite("dc_width", &LayoutParams::dc_width)
      .def_readwrite("rail_length", &LayoutParams::rail_length)
      .def_readwrite("inter_cell_ground", &LayoutParams::inter_cell_ground)
      .def_readwrite("n_zones", &LayoutParams::n_zones)
      .def_readwrite("dc_segments_per_zone", &LayoutParams::dc_segments_per_zone)
      .def_readwrite("axial_rows", &LayoutParams::axial_rows);

  py::class_<ElectrodeLayout>(m, "ElectrodeLayout")
      .def(py::init([](std::vector<RectPatch> patches, std::vector<std::pair<double, double>> zones) {
             std::vector<ZoneCenter> zc;
             for (const auto& [x, z] : zones) zc.push_back({x, z});
             return ElectrodeLayout(std::move(patches), std::move(zc));
           }),
           py::arg("patches"), py::arg("zone_centers") = std::vector<std::pair<double, double>>{})
      .def_property_readonly("patches", &ElectrodeLayout::patches)
      .def_property_readonly("zone_centers",
                             [](const ElectrodeLayout& l) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& z : l.zone_centers()) out.emplace_back(z.x, z.z);
                               return out;
                             })
      .def("ids_with_role", &ElectrodeLayout::ids_with_role)
      .def("translated", &ElectrodeLayout::translated, py::arg("dx"), py::arg("dz"))
      .def("to_json", [](const ElectrodeLayout& l) { return io::to_json(l).dump(); })
      .def_static("from_json", [](const std::string& text) { return io::layout_from_json(io::json::parse(text)); });

  m.def("build_five_wire", &build_five_wire, py::arg("params"));
  m.def("build_multizone", &build_multizone, py::arg("params"));
  m.def(
      "validate",
      [](const ElectrodeLayout& l) { return io::to_json(validate(l)).dump(); },
      "Validation report as a JSON string.");
}

void bind_fields(py::module_& m) {
  py::class_<IonSpecies>(m, "IonSpecies")
      .def(py::init<>())
      .def(py::init([](double mass, int charge, std::string label) { return IonSpecies{mass, charge, label}; }),
           py::arg("mass_amu"), py::arg("charge") = 1, py::arg("label") = "")
      .def_readwrite("mass_amu", &IonSpecies::mass_amu)
      .def_readwrite("charge", &IonSpecies::charge)
      .def_readwrite("label", &IonSpecies::label);

  py::class_<DriveConfig>(m, "DriveConfig")
      .def(py::init([](double v_rf, double omega_rf, VoltageMap dc) { return DriveConfig{v_rf, omega_rf, dc}; }),
           py::arg("v_rf"), py::arg("omega_rf"), py::arg("dc_voltages") = VoltageMap{})
      .def_readwrite("v_rf", &DriveConfig::v_rf)
      .def_readwrite("omega_rf", &DriveConfig::omega_rf)
      .def_readwrite("dc_voltages", &DriveConfig::dc_voltages)
      .def_static("reference", &DriveConfig::reference);

  py::class_<FieldSample>(m, "FieldSample")
      .def_readonly("phi", &FieldSample::phi)
      .def_readonly("grad", &FieldSample::grad)
      .def_readonly("hessian", &FieldSample::hessian);

  m.def("patch_basis", &patch_basis, py::arg("patch"), py::arg("point_um"));
  m.def("superpose", &superpose, py::arg("layout"), py::arg("voltages"), py::arg("point_um"));
  m.def("pseudopotential", &pseudopotential, py::arg("layout"), py::arg("drive"), py::arg("ion"), py::arg("point_um"));
  m.def("total_potential", &total_potential, py::arg("layout"), py::arg("drive"), py::arg("ion"), py::arg("point_um"));
  m.def(
      "find_rf_nil",
      [](const ElectrodeLayout& l, const DriveConfig& d, const Vec3& guess) {
        return find_rf_nil(l, d, guess).position_um;
      },
      py::arg("layout"), py::arg("drive"), py::arg("guess_um"));
  m.def(
      "characterize",
      [](const ElectrodeLayout& l, const DriveConfig& d, const IonSpecies& ion, const Vec3& guess) {
        return characterization_dict(characterize(l, d, ion, guess));
      },
      py::arg("layout"), py::arg("drive"), py::arg("ion"), py::arg("guess_um"));
}

void bind_designer(py::module_& m) {
  m.def("ion_height_formula", &ion_height_formula, py::arg("a"), py::arg("b"), py::arg("c"));
  m.def("gamma", &surftrap::gamma, py::arg("v_rf"), py::arg("omega_rf"), py::arg("ion") = IonSpecies{});
  m.def("secular_estimate", &secular_estimate, py::arg("v_rf"), py::arg("omega_rf"), py::arg("ion"), py::arg("h_um"));
  m.def("kappa_of_geometry", &kappa_of_geometry, py::arg("a"), py::arg("b"), py::arg("c"));
  m.def(
      "depth_formula",
      [](double a, double b, double c, double v_rf, double omega_rf, const IonSpecies& ion) {
        const DepthEstimate e = depth_formula(a, b, c, v_rf, omega_rf, ion);
        py::dict d;
        d["gamma"] = e.gamma;
        d["kappa"] = e.kappa;
        d["depth_eV"] = e.depth_eV;
        d["h_um"] = e.h_um;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("v_rf"), py::arg("omega_rf"), py::arg("ion") = IonSpecies{});
  m.def(
      "optimize_geometry",
      [](double target_h, std::pair<double, double> a, std::pair<double, double> b, std::pair<double, double> c,
         bool equal_rails, std::uint64_t seed) {
        OptimizeRequest r;
        r.target_h_um = target_h;
        r.a = {a.first, a.second};
        r.b = {b.first, b.second};
        r.c = {c.first, c.second};
        r.equal_rails = equal_rails;
        r.seed = seed;
        const OptimizeResult o = optimize_geometry(r);
        py::dict d;
        d["a"] = o.a;
        d["b"] = o.b;
        d["c"] = o.c;
        d["h_um"] = o.h_um;
        d["kappa"] = o.kappa;
        d["depth_eV"] = o.depth_eV;
        return d;
      },
      py::arg("target_h_um"), py::arg("a_bounds") = std::pair{20.0, 400.0},
      py::arg("b_bounds") = std::pair{50.0, 2000.0}, py::arg("c_bounds") = std::pair{50.0, 2000.0},
      py::arg("equal_rails") = true, py::arg("seed") = 0);
  m.def(
      "solve_dc_voltages",
      [](const ElectrodeLayout& l, const Vec3& center, double axial_hz, std::pair<double, double> bounds,
         const IonSpecies& ion) {
        return solve_dc_voltages(l, {center, axial_hz, ion}, {bounds.first, bounds.second}).voltages;
      },
      py::arg("layout"), py::arg("center_um"), py::arg("axial_freq_hz"), py::arg("bounds") = std::pair{-50.0, 50.0},
      py::arg("ion") = IonSpecies{});
  m.def(
      "transport_waveform",
      [](const ElectrodeLayout& l, const DriveConfig& d, const Vec3& start, const Vec3& end, int n_steps,
         double axial_hz, std::pair<double, double> bounds, const IonSpecies& ion) {
        const Waveform w = transport_waveform(l, d, start, end, n_steps, {start, axial_hz, ion},
                                              {bounds.first, bounds.second});
        py::dict out;
        out["electrode_ids"] = w.electrode_ids;
        out["steps"] = w.steps;
        out["well_positions_um"] = w.well_positions_um;
        out["depths_eV"] = w.depths_eV;
        return out;
      },
      py::arg("layout"), py::arg("drive"), py::arg("start_um"), py::arg("end_um"), py::arg("n_steps"),
      py::arg("axial_freq_hz"), py::arg("bounds") = std::pair{-50.0, 50.0}, py::arg("ion") = IonSpecies{});
  m.def(
      "vertical_shift",
      [](const ElectrodeLayout& l, const DriveConfig& d, const Vec3& nil, double dh, std::pair<double, double> bounds,
         const IonSpecies& ion) {
        const VerticalShift v = vertical_shift(l, d, ion, nil, dh, {bounds.first, bounds.second});
        py::dict out;
        out["voltages"] = v.voltages;
        out["base_height_um"] = v.base_height_um;
        out["achieved_shift_um"] = v.achieved_shift_um;
        return out;
      },
      py::arg("layout"), py::arg("drive"), py::arg("nil_um"), py::arg("delta_h_um"),
      py::arg("bounds") = std::pair{-50.0, 50.0}, py::arg("ion") = IonSpecies{});
  m.def("heating_scale", &heating_scale, py::arg("h_ref"), py::arg("h_new"));
  m.def(
      "check_voltage_limits",
      [](const DriveConfig& d, double min_gap) { return io::to_json(check_voltage_limits(d, min_gap)).dump(); },
      py::arg("drive"), py::arg("min_gap_um"));
}

void bind_sensing(py::module_& m) {
  m.def(
      "sensitivity",
      [](int n, double t2, double t_tot, bool entangled) { return sensitivity({n, t2, t_tot, entangled}); },
      py::arg("n") = 1, py::arg("t2_s") = 1.0, py::arg("t_tot_s") = 1.0, py::arg("entangled") = false);
  m.def(
      "required_resources",
      [](double target, const std::string& solve_for, int n, double t2, double t_tot, bool entangled) {
        ResourceRequest r;
        r.target_T = target;
        r.solve_for = resource_from_string(solve_for);
        r.fixed = {n, t2, t_tot, entangled};
        const ResourceResult res = required_resources(r);
        py::dict d;
        d["n"] = res.spec.n;
        d["t2_s"] = res.spec.t2_s;
        d["t_tot_s"] = res.spec.t_tot_s;
        d["achieved_T"] = res.achieved_T;
        return d;
      },
      py::arg("target_T"), py::arg("solve_for"), py::arg("n") = 1, py::arg("t2_s") = 1.0, py::arg("t_tot_s") = 1.0,
      py::arg("entangled") = false);
  m.def(
      "tune",
      [](double b, const std::string& band) { return io::to_json(tune(b, band_from_string(band))).dump(); },
      py::arg("bias_field_T"), py::arg("band") = "rf");
  m.def(
      "gradiometer_resolution",
      [](std::vector<Vec3> positions, std::vector<double> sens, const std::string& pairing) {
        const auto pairs = gradiometer_resolution({std::move(positions), std::move(sens)}, pairing_from_string(pairing));
        py::list out;
        for (const auto& p : pairs) {
          out.append(py::make_tuple(p.i, p.j, p.baseline_um, p.grad_sens_T_per_m));
        }
        return out;
      },
      py::arg("positions_um"), py::arg("sensitivities_T"), py::arg("pairing") = "adjacent");
}

}  // namespace

PYBIND11_MODULE(_surftrap, m) {
  m.doc() = "Surface-electrode ion trap modelling: fields, pseudopotential, design and sensing";
  bind_errors(m);
  bind_geometry(m);
  bind_fields(m);
  bind_designer(m);
  bind_sensing(m);
}
