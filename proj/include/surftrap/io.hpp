#pragma once

// Serialisation of layouts, reports, grids and waveforms. JSON uses
// nlohmann::json; CSV is written by hand with round-trip number formatting
// so repeated runs give byte-identical files.

#include "surftrap/designer.hpp"
#include "surftrap/efield.hpp"
#include "surftrap/geometry.hpp"
#include "surftrap/pseudo.hpp"
#include "surftrap/sensing.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace surftrap::io {

using json = nlohmann::ordered_json;

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);

json to_json(const LayoutParams& params);
LayoutParams params_from_json(const json& doc, const std::string& where = "params");

/// {params?, patches: [{id, role, x_min, x_max, z_min, z_max}], zone_centers: [{x, z}]}, um.
json to_json(const ElectrodeLayout& layout);
/// Throws InvalidParameter naming the offending JSON path.
ElectrodeLayout layout_from_json(const json& doc, const std::string& where = "layout");

json to_json(const ValidationReport& report);
json to_json(const DriveConfig& drive);
json to_json(const IonSpecies& ion);
json to_json(const TrapCharacterization& c);

/// Header `x_um,y_um,z_um,phi_V,Ex,Ey,Ez[,psi_eV]`; E = -grad phi in V/m.
void write_grid_csv(std::ostream& os, const FieldGrid& grid);
json grid_metadata(const FieldGrid& grid);

/// Header `step,<electrode ids...>,well_x_um,well_y_um,well_z_um`.
void write_waveform_csv(std::ostream& os, const Waveform& waveform);
json to_json(const Waveform& waveform);

json to_json(const SensitivitySpec& spec);
json to_json(const TuningMap& map);
json to_json(const OptimizeResult& result);

/// Header `pair,baseline_um,grad_sens_pT_per_sqrtHz_per_mm`.
void write_gradiometer_csv(std::ostream& os, const std::vector<GradientPair>& pairs);
json to_json(const std::vector<GradientPair>& pairs);

}  // namespace surftrap::io
