#pragma once

#include <numbers>

// CODATA 2018 exact / recommended values, SI units.
namespace surftrap::constants {

inline constexpr double kElementaryCharge = 1.602176634e-19;     // C
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;     // kg
inline constexpr double kHbar = 1.054571817e-34;                 // J s
inline constexpr double kBohrMagneton = 9.2740100783e-24;        // J / T
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Joules per electron-volt.
inline constexpr double kElectronVolt = kElementaryCharge;

}  // namespace surftrap::constants
