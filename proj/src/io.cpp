#include "surftrap/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

namespace surftrap::io {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw InvalidParameter(where + ": " + what);
}

const json& require_object(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected an object");
  return doc;
}

void reject_unknown(const json& doc, const std::string& where, std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : doc.items()) {
    if (!allowed.count(item.key())) fail(where + "." + item.key(), "unknown key");
  }
}

double number_at(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) fail(where + "." + key, "missing required number");
  const json& v = doc.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where + "." + key, "expected a finite number");
  return d;
}

int integer_at(const json& doc, const char* key, const std::string& where) {
  const json& v = doc.at(key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

std::string string_at(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) fail(where + "." + key, "missing required string");
  const json& v = doc.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json vec_um(const Vec3& v) { return {{"x_um", v.x()}, {"y_um", v.y()}, {"z_um", v.z()}}; }

std::string_view defect_kind(DefectKind k) {
  switch (k) {
    case DefectKind::Overlap: return "overlap";
    case DefectKind::ZeroArea: return "zero_area";
    case DefectKind::VoltageLimit: return "voltage_limit";
    case DefectKind::GapLimit: return "gap_limit";
  }
  return "unknown";
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json to_json(const LayoutParams& p) {
  json j;
  j["a"] = p.a;
  j["b"] = p.b;
  j["c"] = p.c;
  j["dc_width"] = p.dc_width;
  if (p.rail_length) j["rail_length"] = *p.rail_length;
  if (p.inter_cell_ground) j["inter_cell_ground"] = *p.inter_cell_ground;
  j["n_zones"] = p.n_zones;
  j["dc_segments_per_zone"] = p.dc_segments_per_zone;
  if (p.axial_rows) j["axial_rows"] = *p.axial_rows;
  return j;
}

LayoutParams params_from_json(const json& doc, const std::string& where) {
  require_object(doc, where);
  reject_unknown(doc, where,
                 {"a", "b", "c", "dc_width", "rail_length", "inter_cell_ground", "n_zones", "dc_segments_per_zone",
                  "axial_rows"});
  LayoutParams p;
  if (doc.contains("a")) p.a = number_at(doc, "a", where);
  if (doc.contains("b")) p.b = number_at(doc, "b", where);
  if (doc.contains("c")) p.c = number_at(doc, "c", where);
  if (doc.contains("dc_width")) p.dc_width = number_at(doc, "dc_width", where);
  if (doc.contains("rail_length")) p.rail_length = number_at(doc, "rail_length", where);
  if (doc.contains("inter_cell_ground")) p.inter_cell_ground = number_at(doc, "inter_cell_ground", where);
  if (doc.contains("n_zones")) p.n_zones = integer_at(doc, "n_zones", where);
  if (doc.contains("dc_segments_per_zone")) p.dc_segments_per_zone = integer_at(doc, "dc_segments_per_zone", where);
  if (doc.contains("axial_rows")) p.axial_rows = integer_at(doc, "axial_rows", where);
  try {
    p.check();
  } catch (const InvalidParameter& e) {
    fail(where, e.what());
  }
  return p;
}

json to_json(const ElectrodeLayout& layout) {
  json j;
  if (layout.params()) j["params"] = to_json(*layout.params());
  json patches = json::array();
  for (const auto& p : layout.patches()) {
    patches.push_back({{"id", p.id},
                       {"role", std::string(to_string(p.role))},
                       {"x_min", p.x_min},
                       {"x_max", p.x_max},
                       {"z_min", p.z_min},
                       {"z_max", p.z_max}});
  }
  j["patches"] = std::move(patches);
  json zones = json::array();
  for (const auto& z : layout.zone_centers()) zones.push_back({{"x", z.x}, {"z", z.z}});
  j["zone_centers"] = std::move(zones);
  return j;
}

ElectrodeLayout layout_from_json(const json& doc, const std::string& where) {
  require_object(doc, where);
  reject_unknown(doc, where, {"params", "patches", "zone_centers"});
  std::optional<LayoutParams> params;
  if (doc.contains("params") && !doc.at("params").is_null()) {
    params = params_from_json(doc.at("params"), where + ".params");
  }
  if (!doc.contains("patches") || !doc.at("patches").is_array()) fail(where + ".patches", "expected an array");
  std::vector<RectPatch> patches;
  const json& arr = doc.at("patches");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = where + ".patches[" + std::to_string(i) + "]";
    const json& e = require_object(arr[i], at);
    reject_unknown(e, at, {"id", "role", "x_min", "x_max", "z_min", "z_max"});
    RectPatch p;
    p.id = string_at(e, "id", at);
    try {
      p.role = role_from_string(string_at(e, "role", at));
    } catch (const InvalidParameter& ex) {
      fail(at + ".role", ex.what());
    }
    p.x_min = number_at(e, "x_min", at);
    p.x_max = number_at(e, "x_max", at);
    p.z_min = number_at(e, "z_min", at);
    p.z_max = number_at(e, "z_max", at);
    patches.push_back(std::move(p));
  }
  std::vector<ZoneCenter> zones;
  if (doc.contains("zone_centers")) {
    const json& zarr = doc.at("zone_centers");
    if (!zarr.is_array()) fail(where + ".zone_centers", "expected an array");
    for (std::size_t i = 0; i < zarr.size(); ++i) {
      const std::string at = where + ".zone_centers[" + std::to_string(i) + "]";
      require_object(zarr[i], at);
      zones.push_back({number_at(zarr[i], "x", at), number_at(zarr[i], "z", at)});
    }
  }
  try {
    return ElectrodeLayout(std::move(patches), std::move(zones), params);
  } catch (const InvalidParameter& e) {
    fail(where, e.what());
  }
}

json to_json(const ValidationReport& report) {
  json defects = json::array();
  for (const auto& d : report.defects) {
    defects.push_back({{"kind", std::string(defect_kind(d.kind))}, {"ids", d.ids}, {"message", d.message}});
  }
  return {{"ok", report.ok()}, {"defects", std::move(defects)}, {"notes", report.notes}};
}

json to_json(const DriveConfig& drive) {
  json dc = json::object();
  for (const auto& [id, v] : drive.dc_voltages) dc[id] = v;
  return {{"v_rf_V", drive.v_rf}, {"omega_rf_rad_per_s", drive.omega_rf}, {"dc_voltages_V", std::move(dc)}};
}

json to_json(const IonSpecies& ion) {
  return {{"label", ion.label}, {"mass_amu", ion.mass_amu}, {"charge", ion.charge}};
}

json to_json(const TrapCharacterization& c) {
  json axes = json::array();
  for (int i = 0; i < 3; ++i) axes.push_back(vec_json(c.principal_axes.col(i)));
  return {{"nil_position_um", vec_um(c.nil_position_um)},
          {"nil_residual_per_m", c.nil_residual},
          {"minimum_um", vec_um(c.minimum_um)},
          {"ion_height_um", c.ion_height_um},
          {"trap_depth_eV", c.trap_depth_eV},
          {"escape_point_um", vec_um(c.escape_point_um)},
          {"escape_refined", c.escape_refined},
          {"secular_freqs_Hz", {{"x", c.secular_freqs_hz[0]}, {"y", c.secular_freqs_hz[1]}, {"z", c.secular_freqs_hz[2]}}},
          {"axially_confined", c.axially_confined},
          {"principal_axes_columns", std::move(axes)},
          {"rotation_deg", c.rotation_deg},
          {"rotation_degenerate", c.rotation_degenerate}};
}

void write_grid_csv(std::ostream& os, const FieldGrid& grid) {
  const bool with_pseudo = !grid.pseudo_eV.empty();
  os << "x_um,y_um,z_um,phi_V,Ex,Ey,Ez";
  if (with_pseudo) os << ",psi_eV";
  os << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 p = grid.point_um(i);
    const FieldSample& s = grid.samples[i];
    os << format_number(p.x()) << ',' << format_number(p.y()) << ',' << format_number(p.z()) << ','
       << format_number(s.phi) << ',' << format_number(-s.grad.x()) << ',' << format_number(-s.grad.y()) << ','
       << format_number(-s.grad.z());
    if (with_pseudo) os << ',' << format_number(grid.pseudo_eV[i]);
    os << '\n';
  }
}

json grid_metadata(const FieldGrid& grid) {
  const auto& r = grid.region;
  return {{"order", "row-major, x slowest, z fastest"},
          {"min_um", vec_json(r.min_um)},
          {"max_um", vec_json(r.max_um)},
          {"resolution", r.resolution},
          {"n_samples", grid.size()},
          {"columns", grid.pseudo_eV.empty()
                          ? json::array({"x_um", "y_um", "z_um", "phi_V", "Ex", "Ey", "Ez"})
                          : json::array({"x_um", "y_um", "z_um", "phi_V", "Ex", "Ey", "Ez", "psi_eV"})},
          {"field_units", "V/m"}};
}

void write_waveform_csv(std::ostream& os, const Waveform& w) {
  os << "step";
  for (const auto& id : w.electrode_ids) os << ',' << id;
  os << ",well_x_um,well_y_um,well_z_um\n";
  for (std::size_t k = 0; k < w.steps.size(); ++k) {
    os << k;
    for (const auto& id : w.electrode_ids) {
      const auto it = w.steps[k].find(id);
      os << ',' << format_number(it == w.steps[k].end() ? 0.0 : it->second);
    }
    const Vec3& p = w.well_positions_um[k];
    os << ',' << format_number(p.x()) << ',' << format_number(p.y()) << ',' << format_number(p.z()) << '\n';
  }
}

json to_json(const Waveform& w) {
  json steps = json::array();
  for (std::size_t k = 0; k < w.steps.size(); ++k) {
    json volts = json::object();
    for (const auto& id : w.electrode_ids) {
      const auto it = w.steps[k].find(id);
      volts[id] = it == w.steps[k].end() ? 0.0 : it->second;
    }
    json s = {{"step", k},
              {"voltages_V", std::move(volts)},
              {"well_um", vec_um(w.well_positions_um[k])},
              {"target_um", vec_um(w.target_positions_um[k])},
              {"depth_eV", w.depths_eV[k]}};
    if (!w.timestamps_s.empty()) s["time_s"] = w.timestamps_s[k];
    steps.push_back(std::move(s));
  }
  return {{"electrode_ids", w.electrode_ids}, {"steps", std::move(steps)}};
}

json to_json(const SensitivitySpec& spec) {
  return {{"n", spec.n}, {"t2_s", spec.t2_s}, {"t_tot_s", spec.t_tot_s}, {"entangled", spec.entangled}};
}

json to_json(const TuningMap& m) {
  return {{"bias_field_T", m.bias_field_T},
          {"band", std::string(to_string(m.band))},
          {"f_plus_Hz", m.f_plus_hz},
          {"f_minus_Hz", m.f_minus_hz},
          {"f_zero_Hz", m.f_zero_hz},
          {"sensing_frequency_Hz", m.sensing_frequency_hz},
          {"in_range", m.in_range}};
}

json to_json(const OptimizeResult& r) {
  return {{"a_um", r.a},     {"b_um", r.b},         {"c_um", r.c},
          {"h_um", r.h_um},  {"kappa", r.kappa},    {"depth_eV", r.depth_eV},
          {"evaluations", r.evaluations}};
}

namespace {
// T/(sqrt(Hz) m) -> pT/(sqrt(Hz) mm)
constexpr double kGradToPtPerMm = 1e12 * 1e-3;
}  // namespace

void write_gradiometer_csv(std::ostream& os, const std::vector<GradientPair>& pairs) {
  os << "pair,baseline_um,grad_sens_pT_per_sqrtHz_per_mm\n";
  for (const auto& p : pairs) {
    os << p.i << '-' << p.j << ',' << format_number(p.baseline_um) << ','
       << format_number(p.grad_sens_T_per_m * kGradToPtPerMm) << '\n';
  }
}

json to_json(const std::vector<GradientPair>& pairs) {
  json arr = json::array();
  for (const auto& p : pairs) {
    arr.push_back({{"pair", json::array({p.i, p.j})},
                   {"baseline_um", p.baseline_um},
                   {"grad_sens_pT_per_sqrtHz_per_mm", p.grad_sens_T_per_m * kGradToPtPerMm}});
  }
  return arr;
}

}  // namespace surftrap::io
