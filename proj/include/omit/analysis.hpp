#pragma once

// Model-free lineshape measurements on a single trace: starting values for
// the fitter and the numeric linewidth of the optomechanical feature.

#include <optional>

#include "omit/sweep.hpp"

namespace omit::fit {

struct InitialGuess {
  std::optional<double> omega_c;         // absolute, rad/s; only when the notch is bracketed
  std::optional<double> kappa;           // rad/s; only when the notch is bracketed
  std::optional<double> feature_center;  // probe offset Omega, rad/s
};

/// omega_c: argmin of the smoothed |S21|. kappa: full width at half depth of
/// the power notch 1 - |S21|^2 (exactly kappa for a bare Lorentzian notch).
/// feature_center: extremum of |S21| minus a linear background through the
/// trace ends. Throws FeatureNotFound when neither a notch nor a feature
/// stands above 3x the noise estimate.
InitialGuess init_heuristics(const sweep::SweepTrace& trace);

/// Full width (rad/s) at half contrast of the power feature |S21|^2 against a
/// linear background through the trace ends, interpolating linearly between
/// bracketing samples. Throws FeatureNotFound when the feature does not stand
/// out of the background and UnderResolved when fewer than 20 samples fall
/// inside the width or the half-contrast points lie outside the trace.
double extract_linewidth(const sweep::SweepTrace& trace);

/// Robust per-sample noise estimate from first differences (MAD based).
double noise_estimate(std::span<const double> values);

}  // namespace omit::fit
