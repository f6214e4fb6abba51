#pragma once

// Design-level tools: closed-form estimators for ion height, Gamma, trap depth
// and secular frequency, the geometric factor kappa, geometry optimisation at
// fixed ion height, DC well solving, transport waveforms and engineering
// limit checks.

#include "surftrap/common.hpp"
#include "surftrap/drive.hpp"
#include "surftrap/geometry.hpp"
#include "surftrap/pseudo.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace surftrap {

/// h = sqrt(a b c (a + b + c)) / (b + c) for a five-wire cross-section, um.
double ion_height_formula(double a, double b, double c);

/// Gamma = e^2 V_rf^2 / (pi^2 m Omega^2), J m^2. Uses the ion's charge number
/// for e.
double gamma(double v_rf, double omega_rf, const IonSpecies& ion);

/// Secular-frequency estimator omega_s = e V_rf / (sqrt(2) m h^2 Omega),
/// returned as omega_s / 2 pi in Hz. It ignores the geometric efficiency of
/// the electrodes and overestimates the full-field radial frequency about 3x
/// for the reference trap; use secular_frequencies() for real numbers.
double secular_estimate(double v_rf, double omega_rf, const IonSpecies& ion, double h_um);

/// Geometric factor from a full simulation of the five-wire trap:
/// kappa = depth * h^2 / Gamma with h from ion_height_formula. Independent of
/// drive, ion and overall scale. Uncached.
double extract_kappa(double a, double b, double c);

/// Cache of kappa keyed by the width ratios (b/a, c/a). Concurrent readers,
/// single writer on insertion.
class KappaCache {
 public:
  double get(double a, double b, double c);
  std::size_t size() const;
  void clear();

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<double, double>, double> values_;
};

/// Process-wide cached kappa.
double kappa_of_geometry(double a, double b, double c);

struct DepthEstimate {
  double gamma = 0.0;    ///< J m^2
  double kappa = 0.0;
  double depth_eV = 0.0;
  double h_um = 0.0;
};

/// depth = kappa Gamma / h^2.
DepthEstimate depth_formula(double a, double b, double c, double v_rf, double omega_rf, const IonSpecies& ion);

/// Ratio (h_new / h_ref)^-4 of motional heating rates.
double heating_scale(double h_ref, double h_new);

struct WidthBounds {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct OptimizeRequest {
  double target_h_um = 123.3;
  WidthBounds a{20.0, 400.0};
  WidthBounds b{50.0, 2000.0};
  WidthBounds c{50.0, 2000.0};
  bool equal_rails = true;
  DriveConfig drive = DriveConfig::reference();
  IonSpecies ion;
  std::uint64_t seed = 0;
};

struct OptimizeResult {
  double a = 0.0, b = 0.0, c = 0.0;
  double h_um = 0.0;
  double kappa = 0.0;
  double depth_eV = 0.0;
  int evaluations = 0;
};

/// Maximises depth_formula subject to ion_height_formula(a, b, c) = target_h.
/// One width is eliminated by the height constraint; with equal rails the
/// search is a scan plus golden section over a, otherwise Nelder-Mead over
/// (a, b). Deterministic for a given request. Throws Infeasible when the
/// height constraint cannot be met within the bounds.
OptimizeResult optimize_geometry(const OptimizeRequest& request);

/// Width c completing (a, b) to the target height, if one lies in `c_bounds`.
std::optional<double> rail_width_for_height(double a, double b, double target_h_um, const WidthBounds& c_bounds);

/// Random geometry on the request's constraint surface.
std::optional<std::array<double, 3>> sample_feasible_geometry(const OptimizeRequest& request, std::mt19937_64& rng);

struct WellSpec {
  Vec3 center_um = Vec3::Zero();
  double axial_freq_hz = 0.0;
  IonSpecies ion;
};

struct VoltageBounds {
  double lo = -50.0;
  double hi = 50.0;
};

struct DcSolveOptions {
  std::vector<ElectrodeRole> roles{ElectrodeRole::DC};
  /// Tikhonov weight relative to the mean squared row norm.
  double regularization = 1e-6;
};

struct DcSolution {
  VoltageMap voltages;
  double residual_gradient = 0.0;   ///< |grad phi_dc| at the center, V/m
  double target_curvature = 0.0;    ///< d^2 phi / dz^2 requested, V/m^2
  double achieved_curvature = 0.0;  ///< V/m^2
};

/// Static voltages placing a harmonic axial well at well.center: zero static
/// force in x, y and z and axial curvature m (2 pi f)^2 / (Z e). Regularised
/// smallest-norm least squares; electrodes that would leave `bounds` are
/// clamped and the rest re-solved. Throws Infeasible, naming the worst
/// electrodes, if the clamped system misses the targets.
DcSolution solve_dc_voltages(const ElectrodeLayout& layout, const WellSpec& well, const VoltageBounds& bounds,
                             const DcSolveOptions& options = {});

struct Waveform {
  std::vector<std::string> electrode_ids;
  std::vector<VoltageMap> steps;
  std::vector<double> timestamps_s;  ///< empty unless a duration was requested
  std::vector<Vec3> target_positions_um;
  std::vector<Vec3> well_positions_um;  ///< verified total-potential minima
  std::vector<double> depths_eV;
};

struct TransportOptions {
  double depth_floor_eV = 0.05;
  double min_gap_um = 10.0;
  std::optional<double> duration_s;
  EscapeOptions escape{180, 200, 10.0, 0.02, true};
  DcSolveOptions dc;
};

/// Linear transport of the well center from start to end along the RF nil.
/// Each step re-solves the DC voltages, then verifies the actual minimum,
/// its depth against the floor and the voltage limits. Well positions must
/// advance monotonically. Errors name the failing step.
Waveform transport_waveform(const ElectrodeLayout& layout, const DriveConfig& drive, const Vec3& start_um,
                            const Vec3& end_um, int n_steps, const WellSpec& well, const VoltageBounds& bounds,
                            const TransportOptions& options = {});

struct VerticalShift {
  VoltageMap voltages;  ///< center-control electrodes only
  double base_height_um = 0.0;
  double achieved_shift_um = 0.0;
};

/// Control-electrode voltage moving the total-potential minimum under
/// `nil_um` by delta_h vertically. The drive's own static voltages stay on.
VerticalShift vertical_shift(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                             const Vec3& nil_um, double delta_h_um, const VoltageBounds& bounds);

struct VoltageLimits {
  double max_rf_amplitude = 500.0;  ///< V, inclusive
  double min_gap_um = 5.0;          ///< gap for which the amplitude holds, inclusive
};

/// Breakdown advisory. Below the rated gap the allowed amplitude is scaled
/// down linearly with the gap. Static voltages share the same ceiling.
ValidationReport check_voltage_limits(const DriveConfig& drive, double min_gap_um, const VoltageLimits& limits = {});

}  // namespace surftrap
