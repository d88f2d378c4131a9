#pragma once

// Device values used across the tests (rad/s unless noted).

#include <cmath>

#include "omit/model.hpp"
#include "omit/units.hpp"

namespace fixtures {

inline omit::CavityParams cavity(double kappa_khz = 100.0) {
  return {omit::to_angular(6.0e9), omit::to_angular(kappa_khz * 1e3), omit::to_angular(44.0e3)};
}

inline omit::MechanicalParams mechanics(double gamma_m_hz = 15.3) {
  return {omit::to_angular(3.8e6), omit::to_angular(gamma_m_hz), omit::to_angular(0.56)};
}

// n_cav giving cooperativity c for the given cavity and mechanics.
inline double photons_for(double c, const omit::CavityParams& cav, const omit::MechanicalParams& mech) {
  return c * cav.kappa * mech.gamma_m / (4.0 * mech.g0 * mech.g0);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace fixtures
