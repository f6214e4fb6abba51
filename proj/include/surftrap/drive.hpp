#pragma once

#include "surftrap/constants.hpp"

#include <map>
#include <string>

namespace surftrap {

/// Electrode id -> volts. Electrodes not listed are held at 0 V.
using VoltageMap = std::map<std::string, double>;

struct IonSpecies {
  double mass_amu = 171.0;
  int charge = 1;  ///< charge number Z
  std::string label = "171Yb+";

  double mass_kg() const { return mass_amu * constants::kAtomicMassUnit; }
  double charge_C() const { return charge * constants::kElementaryCharge; }
  /// Throws InvalidParameter unless mass > 0 and Z >= 1.
  void check() const;

  static IonSpecies ytterbium171() { return {}; }
};

struct DriveConfig {
  double v_rf = 0.0;      ///< amplitude on every RF patch, volts
  double omega_rf = 1.0;  ///< angular drive frequency, rad/s
  VoltageMap dc_voltages;

  /// Throws InvalidParameter unless v_rf >= 0 and omega_rf > 0.
  void check() const;

  /// Reference operating point: 200 V at 2 pi x 22 MHz, no static voltages.
  static DriveConfig reference() { return {200.0, constants::kTwoPi * 22e6, {}}; }
};

}  // namespace surftrap
