#pragma once

// Magnetometer budgets for trapped-ion sensors: shot-noise-limited field
// sensitivity, its inversion into required resources, the first-order Zeeman
// tuning map and multi-zone gradiometer resolution.
//
// Field sensitivities are in T/sqrt(Hz); gradient sensitivities in
// T/(sqrt(Hz) m).

#include "surftrap/common.hpp"

#include <string_view>
#include <vector>

namespace surftrap {

struct SensitivitySpec {
  int n = 1;             ///< number of ions
  double t2_s = 1.0;     ///< coherence time
  double t_tot_s = 1.0;  ///< total sensing time
  bool entangled = false;

  void check() const;
};

/// 2.33 hbar / mu_B, T s.
double sensitivity_prefactor();

/// 2.33 hbar / (mu_B sqrt(n T_tot T2)); the entangled variant is a further
/// 1/sqrt(n) better, giving overall 1/n scaling.
double sensitivity(const SensitivitySpec& spec);

enum class Resource { IonCount, CoherenceTime, TotalTime, EqualTimes };

std::string_view to_string(Resource r);
Resource resource_from_string(std::string_view name);

struct ResourceRequest {
  double target_T = 0.0;
  Resource solve_for = Resource::IonCount;
  SensitivitySpec fixed;  ///< the solved field is ignored on input
  int n_max = 1'000'000;
};

struct ResourceResult {
  SensitivitySpec spec;
  double achieved_T = 0.0;
};

/// Smallest value of the free field that reaches the target. Ion counts are
/// rounded up; EqualTimes solves t2 = t_tot together. Throws Infeasible if
/// the ion count would exceed n_max.
ResourceResult required_resources(const ResourceRequest& request);

enum class Band { RF, Microwave };

std::string_view to_string(Band b);
Band band_from_string(std::string_view name);

struct TuningConfig {
  double gamma_hz_per_tesla = 1.4e10;  ///< first-order m_F = +-1 shift
  double microwave_center_hz = 12.642e9;
  double rf_band_lo_hz = 1e6;
  double rf_band_hi_hz = 150e6;
  double microwave_band_lo_hz = 12.5e9;
  double microwave_band_hi_hz = 12.7e9;
};

struct TuningMap {
  double bias_field_T = 0.0;
  Band band = Band::RF;
  double f_plus_hz = 0.0;
  double f_minus_hz = 0.0;
  double f_zero_hz = 0.0;
  /// RF: the m_F = 0 to +-1 splitting. Microwave: the upper transition.
  double sensing_frequency_hz = 0.0;
  /// Inclusive band check on every reported transition.
  bool in_range = false;
};

/// Linear Zeeman map. RF reports f0 = 0 and f+- = +-gamma B; microwave
/// reports f0 = band center and f+- = center +- gamma B. Throws
/// InvalidParameter for a negative field.
TuningMap tune(double bias_field_T, Band band, const TuningConfig& config = {});

struct ZoneArray {
  std::vector<Vec3> positions_um;
  std::vector<double> sensitivity_T;  ///< per zone, T/sqrt(Hz)

  /// Throws InvalidParameter unless there are >= 2 zones, the lists match in
  /// length and all sensitivities are >= 0.
  void check() const;
};

enum class Pairing { Adjacent, AllPairs };

std::string_view to_string(Pairing p);
Pairing pairing_from_string(std::string_view name);

struct GradientPair {
  int i = 0;
  int j = 0;
  double baseline_um = 0.0;
  double grad_sens_T_per_m = 0.0;
};

/// sqrt(dB_i^2 + dB_j^2) / d per pair, assuming independent zone noise.
/// Adjacent pairs follow list order. Throws ZeroBaseline for coincident zones.
std::vector<GradientPair> gradiometer_resolution(const ZoneArray& array, Pairing pairing);

}  // namespace surftrap
