#pragma once

// Electrode layouts on the trap plane.
//
// Coordinates: the trap surface is the plane y = 0, ions sit at y > 0, x is
// the transverse in-plane axis and z runs along the rails. Patch extents are
// stored in micrometres.

#include "surftrap/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace surftrap {

enum class ElectrodeRole { RF, DC, CenterControl, Ground };

std::string_view to_string(ElectrodeRole role);
ElectrodeRole role_from_string(std::string_view name);

struct RectPatch {
  std::string id;
  ElectrodeRole role = ElectrodeRole::Ground;
  double x_min = 0.0;
  double x_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;

  double width() const { return x_max - x_min; }
  double length() const { return z_max - z_min; }
  double area() const { return width() * length(); }
  double x_center() const { return 0.5 * (x_min + x_max); }
  double z_center() const { return 0.5 * (z_min + z_max); }
  bool contains(double x, double z) const {
    return x >= x_min && x <= x_max && z >= z_min && z <= z_max;
  }

  friend bool operator==(const RectPatch&, const RectPatch&) = default;
};

/// Generator inputs. Widths in micrometres.
struct LayoutParams {
  double a = 85.0;          ///< center control (ground) electrode width
  double b = 315.0;         ///< left RF rail width
  double c = 315.0;         ///< right RF rail width
  double dc_width = 310.0;  ///< DC segment width, both transverse and axial
  /// Defaults to 10 (a + b + c).
  std::optional<double> rail_length;
  /// Ground strip between replicated cells. Defaults to `a`.
  std::optional<double> inter_cell_ground;
  int n_zones = 1;
  int dc_segments_per_zone = 6;
  /// Zones along z. Defaults to the most nearly square factorisation of n_zones.
  std::optional<int> axial_rows;

  double resolved_rail_length() const { return rail_length.value_or(10.0 * (a + b + c)); }
  double resolved_inter_cell_ground() const { return inter_cell_ground.value_or(a); }
  int resolved_axial_rows() const;
  int transverse_cells() const { return n_zones / resolved_axial_rows(); }
  /// Transverse distance between neighbouring cell centres.
  double cell_pitch() const { return a + b + c + resolved_inter_cell_ground(); }

  /// Throws InvalidParameter on non-positive lengths or counts.
  void check() const;
  LayoutParams scaled(double s) const;

  friend bool operator==(const LayoutParams&, const LayoutParams&) = default;
};

/// Nominal trapping location on the plane; the height is found by analysis.
struct ZoneCenter {
  double x = 0.0;
  double z = 0.0;
  friend bool operator==(const ZoneCenter&, const ZoneCenter&) = default;
};

/// Immutable set of coplanar rectangles. Anything not covered is grounded.
class ElectrodeLayout {
 public:
  ElectrodeLayout() = default;
  /// Throws InvalidParameter on inverted extents (min > max), non-finite
  /// coordinates or duplicate ids. Zero-area patches are accepted here and
  /// reported by validate().
  ElectrodeLayout(std::vector<RectPatch> patches, std::vector<ZoneCenter> zone_centers,
                  std::optional<LayoutParams> params = std::nullopt);

  const std::vector<RectPatch>& patches() const { return patches_; }
  const std::vector<ZoneCenter>& zone_centers() const { return zone_centers_; }
  const std::optional<LayoutParams>& params() const { return params_; }

  /// nullptr when absent.
  const RectPatch* find(std::string_view id) const;
  std::vector<const RectPatch*> with_role(ElectrodeRole role) const;
  std::vector<std::string> ids_with_role(ElectrodeRole role) const;

  ElectrodeLayout translated(double dx, double dz) const;

 private:
  std::vector<RectPatch> patches_;
  std::vector<ZoneCenter> zone_centers_;
  std::optional<LayoutParams> params_;
};

/// Single-zone trap: two RF rails around a center control electrode, with
/// segmented DC electrodes outboard of the rails. Requires n_zones == 1.
ElectrodeLayout build_five_wire(const LayoutParams& params);

/// Grid of five-wire cells. Cells repeat transversely with pitch
/// a + b + c + inter_cell_ground; axial rows repeat the DC segment groups
/// along the shared rails. n_zones = 4 gives 2 x 2 zones, 4 RF rails and
/// 24 DC segments.
ElectrodeLayout build_multizone(const LayoutParams& params);

enum class DefectKind { Overlap, ZeroArea, VoltageLimit, GapLimit };

struct Defect {
  DefectKind kind;
  std::vector<std::string> ids;
  std::string message;
};

struct ValidationReport {
  std::vector<Defect> defects;
  std::vector<std::string> notes;  ///< informational, never failures
  bool ok() const { return defects.empty(); }
  void merge(const ValidationReport& other);
};

/// Pairwise overlaps, zero-area patches and the (informational) gap note.
ValidationReport validate(const ElectrodeLayout& layout);

/// Shell-style glob with `*` and `?`; a comma separates alternatives.
bool glob_match(std::string_view pattern, std::string_view text);

}  // namespace surftrap
