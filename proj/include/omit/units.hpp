#pragma once

#include <numbers>

namespace omit {

/// Reduced Planck constant (CODATA 2018), J*s.
inline constexpr double kHbar = 1.054571817e-34;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Everything inside the library is angular frequency (rad/s). Files, configs
// and printed reports are in Hz; convert at that boundary only.
constexpr double to_angular(double hz) { return kTwoPi * hz; }
constexpr double to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace omit
