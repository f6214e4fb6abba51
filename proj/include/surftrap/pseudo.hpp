#pragma once

// RF pseudopotential, total trapping potential and the trap characterisation
// built on them: RF nil, escape saddle / trap depth, secular frequencies and
// principal axes.

#include "surftrap/common.hpp"
#include "surftrap/drive.hpp"
#include "surftrap/geometry.hpp"

#include <array>
#include <vector>

namespace surftrap {

/// Potential energy landscape of the ion. SI throughout: positions in metres,
/// energy in J, gradient in J/m, Hessian in J/m^2.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual double energy(const Vec3& p) const = 0;
  virtual Vec3 gradient(const Vec3& p) const = 0;
  virtual Mat3 hessian(const Vec3& p) const = 0;
};

/// Pseudopotential of the RF patches plus Z e phi_dc of the static voltages.
///
///   psi = Z^2 e^2 |grad phi_rf|^2 / (4 m Omega^2)
///
/// The Hessian of psi needs third derivatives of phi_rf; they come from the
/// closed-form Hessian evaluated on dual numbers, so it is exact off the nil
/// as well as on it.
class TrapPotential final : public Potential {
 public:
  TrapPotential(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                bool include_dc = true);

  double energy(const Vec3& p) const override;
  Vec3 gradient(const Vec3& p) const override;
  Mat3 hessian(const Vec3& p) const override;

  double pseudo_energy(const Vec3& p) const;
  double static_energy(const Vec3& p) const;
  /// Gradient of the summed RF basis (per applied volt), 1/m.
  Vec3 rf_gradient_per_volt(const Vec3& p) const;
  Mat3 rf_hessian_per_volt(const Vec3& p) const;

  bool has_static_field() const { return !dc_.empty(); }
  bool has_rf() const { return !rf_.empty(); }
  double mass_kg() const { return mass_kg_; }

 private:
  struct Rect {
    double x1, x2, z1, z2;
  };
  std::vector<Rect> rf_;
  std::vector<std::pair<Rect, double>> dc_;
  double pseudo_coeff_ = 0.0;  ///< J m^2 per |grad phi_unit|^2
  double charge_ = 0.0;
  double mass_kg_ = 0.0;
};

/// Pseudopotential energy at a point, eV. Throws OutOfDomain for y <= 0.
double pseudopotential(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                       const Vec3& point_um);

/// Pseudopotential plus Z e phi_dc, eV.
double total_potential(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                       const Vec3& point_um);

struct NilOptions {
  double tol_grad = 1e-6;  ///< |grad phi_rf| per applied volt, 1/m
  int max_iterations = 200;
};

struct NilResult {
  Vec3 position_um = Vec3::Zero();
  double transverse_grad = 0.0;  ///< residual |(d/dx, d/dy) phi_rf| per volt, 1/m
  double axial_grad = 0.0;       ///< residual |d/dz phi_rf| per volt, 1/m
  int iterations = 0;
};

/// Locates the RF nil nearest `guess_um` in the transverse plane z = guess.z.
/// A linear trap's nil is a line; its axial position is set by static
/// fields, so the search is transverse and the axial residual is reported.
/// Damped Newton with a gradient-descent fallback. Throws SearchFailed with
/// the best iterate on non-convergence.
NilResult find_rf_nil(const ElectrodeLayout& layout, const DriveConfig& drive, const Vec3& guess_um,
                      const NilOptions& options = {});

struct MinimumOptions {
  bool freeze_axial = false;  ///< hold z fixed (no axial confinement)
  double step_tol_m = 1e-13;
  int max_iterations = 200;
};

/// Local minimum of a potential by Levenberg-damped Newton, metres.
Vec3 find_potential_minimum(const Potential& potential, const Vec3& guess_m, const MinimumOptions& options = {});

enum class EscapeMethod {
  Flood,    ///< watershed flood of a transverse grid; finds curved passes
  RayScan,  ///< straight rays from the minimum; an upper bound on the pass
};

struct EscapeOptions {
  int n_rays = 360;
  int n_radial = 400;
  double reach = 10.0;            ///< search radius in units of the minimum's height
  double floor_fraction = 0.02;   ///< nothing below this fraction of the height is visited
  bool refine = true;
  EscapeMethod method = EscapeMethod::Flood;
  int cells_per_height = 20;      ///< flood grid spacing is height / cells_per_height
};

struct EscapeResult {
  double depth_eV = 0.0;
  Vec3 escape_point_um = Vec3::Zero();
  bool refined = false;  ///< true when the saddle was polished by Newton
};

/// Lowest escape barrier from `minimum_m` within the transverse plane through
/// it: the lowest pass out of the basin, either into a neighbouring basin or
/// out of the search box. The grid or ray estimate is polished into a saddle
/// by Newton on the in-plane gradient. Throws NoEscapePoint if the potential
/// is still rising at `reach` heights.
EscapeResult find_escape(const Potential& potential, const Vec3& minimum_m, const EscapeOptions& options = {});

/// Depth of the total potential about a converged nil (or DC-shifted minimum).
EscapeResult trap_depth(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                        const Vec3& nil_um, const EscapeOptions& options = {});

struct SecularResult {
  /// Ordered by the axis each mode is most aligned with: x, y, z. Hz.
  std::array<double, 3> freqs_hz{};
  /// Curvatures in the same order, J/m^2.
  std::array<double, 3> eigenvalues{};
  /// Columns are unit eigenvectors in x, y, z order.
  Mat3 axes = Mat3::Identity();
};

/// omega_i = sqrt(lambda_i / m). With `require_minimum`, a non-positive
/// curvature throws NotAMinimum naming the axis; otherwise that mode is
/// reported as 0 Hz.
SecularResult secular_from_hessian(const Mat3& hessian, double mass_kg, bool require_minimum = true);

SecularResult secular_frequencies(const Potential& potential, double mass_kg, const Vec3& minimum_m);

SecularResult secular_frequencies(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                                  const Vec3& minimum_um);

struct RotationResult {
  double degrees = 0.0;
  bool degenerate = false;  ///< radial curvatures equal to 1e-6; angle arbitrary
};

/// Tilt of the radial principal axes out of the trap plane, reported for
/// the radial axis nearest the horizontal.
RotationResult principal_axis_rotation(const SecularResult& secular);

struct TrapCharacterization {
  Vec3 nil_position_um = Vec3::Zero();
  Vec3 minimum_um = Vec3::Zero();  ///< total-potential minimum (= nil without DC push)
  double ion_height_um = 0.0;
  double trap_depth_eV = 0.0;
  Vec3 escape_point_um = Vec3::Zero();
  bool escape_refined = false;
  std::array<double, 3> secular_freqs_hz{};
  Mat3 principal_axes = Mat3::Identity();
  double rotation_deg = 0.0;
  bool rotation_degenerate = false;
  bool axially_confined = false;
  double nil_residual = 0.0;
};

RotationResult principal_axis_rotation(const TrapCharacterization& characterization);

struct CharacterizeOptions {
  NilOptions nil;
  EscapeOptions escape;
};

/// Nil, minimum, depth, secular frequencies and axes for the zone nearest
/// `guess_um`. Without axial confinement the axial mode is reported as 0 Hz.
TrapCharacterization characterize(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                                  const Vec3& guess_um, const CharacterizeOptions& options = {});

}  // namespace surftrap
