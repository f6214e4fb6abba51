#pragma once

// Analytic electrostatics of the gapless plane: each rectangle held at 1 V with
// the rest of the plane grounded has potential equal to its normalised solid
// angle. Every field quantity here is the closed form, never a finite
// difference.
//
// Points are passed in micrometres. FieldSample values are SI: phi in volts
// (or per volt for basis samples), grad in V/m, hessian in V/m^2. Note that
// `grad` is the gradient of phi, i.e. minus the electric field.

#include "surftrap/common.hpp"
#include "surftrap/drive.hpp"
#include "surftrap/geometry.hpp"

#include <array>
#include <optional>
#include <vector>

namespace surftrap {

struct FieldSample {
  double phi = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();

  FieldSample& operator+=(const FieldSample& o) {
    phi += o.phi;
    grad += o.grad;
    hessian += o.hessian;
    return *this;
  }
  FieldSample scaled(double s) const { return {phi * s, grad * s, hessian * s}; }
};

/// Unit-volt basis of one patch. Throws OutOfDomain unless point.y > 0.
FieldSample patch_basis(const RectPatch& patch, const Vec3& point_um);

/// Linear superposition; unlisted patches are grounded. Throws
/// InvalidParameter for an id that is not in the layout.
FieldSample superpose(const ElectrodeLayout& layout, const VoltageMap& voltages, const Vec3& point_um);

/// Field of the RF patches alone, all at drive.v_rf.
FieldSample rf_field_sample(const ElectrodeLayout& layout, const DriveConfig& drive, const Vec3& point_um);

/// Axis-aligned sampling box. An axis with resolution 1 must have min == max.
struct GridRegion {
  Vec3 min_um = Vec3::Zero();
  Vec3 max_um = Vec3::Zero();
  std::array<int, 3> resolution{2, 2, 2};
};

/// Pseudopotential column request for grid_map.
struct PseudoRequest {
  DriveConfig drive;
  IonSpecies ion;
};

struct FieldGrid {
  GridRegion region;
  std::array<std::vector<double>, 3> axes_um;
  /// Row-major, x slowest and z fastest.
  std::vector<FieldSample> samples;
  /// Filled only when a PseudoRequest was given, eV.
  std::vector<double> pseudo_eV;

  std::size_t index(int ix, int iy, int iz) const;
  Vec3 point_um(std::size_t flat) const;
  std::size_t size() const { return samples.size(); }
};

/// Dense sampling of superpose(voltages). Cells are evaluated in parallel;
/// output order is deterministic. Throws OutOfDomain if the box reaches y <= 0.
FieldGrid grid_map(const ElectrodeLayout& layout, const VoltageMap& voltages, const GridRegion& region,
                   const std::optional<PseudoRequest>& pseudo = std::nullopt);

}  // namespace surftrap
