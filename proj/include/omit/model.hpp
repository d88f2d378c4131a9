#pragma once

// Steady-state probe response of a side-coupled microwave cavity with a
// mechanical mode, under a strong red- or blue-detuned pump.
//
// Conventions: Omega = omega_p - omega_d (probe offset from the pump),
// Delta = omega_d - omega_c (pump detuning). All quantities rad/s.

#include <complex>
#include <string_view>
#include <variant>

namespace omit {

using Complex = std::complex<double>;

/// |denominator| below this raises SingularDenominator.
inline constexpr double kSingularityGuard = 1e-9;

struct CavityParams {
  double omega_c = 0.0;    // resonance
  double kappa = 0.0;      // total linewidth
  double kappa_ext = 0.0;  // external (feedline) linewidth

  /// Throws ConfigError unless omega_c > 0, kappa > 0, 0 < kappa_ext <= kappa.
  void validate() const;
};

struct MechanicalParams {
  double omega_m = 0.0;  // resonance
  double gamma_m = 0.0;  // intrinsic linewidth
  double g0 = 0.0;       // vacuum optomechanical coupling

  void validate() const;

  bool sideband_resolved(const CavityParams& cav) const { return omega_m > cav.kappa; }
};

enum class PumpScheme { Red, Blue };

std::string_view to_string(PumpScheme scheme);
/// Accepts "red" / "blue" (case-insensitive); throws ConfigError otherwise.
PumpScheme parse_scheme(std::string_view text);

/// +1 for red (OMIT), -1 for blue (OMIA): the sign in front of g0^2 n chi_c chi_m
/// in the denominator of S21.
constexpr double coupling_sign(PumpScheme scheme) { return scheme == PumpScheme::Red ? 1.0 : -1.0; }

/// Detuning that puts the relevant pump sideband on the cavity: -Omega_m (red), +Omega_m (blue).
constexpr double sideband_detuning(PumpScheme scheme, double omega_m) {
  return scheme == PumpScheme::Red ? -omega_m : omega_m;
}

/// Probe offset at which the mechanical susceptibility peaks: +Omega_m (red), -Omega_m (blue).
constexpr double sideband_probe_offset(PumpScheme scheme, double omega_m) {
  return scheme == PumpScheme::Red ? omega_m : -omega_m;
}

struct InputPower {
  double watts = 0.0;
};

struct PhotonNumber {
  double count = 0.0;
};

/// Exactly one of the two is authoritative; the other follows from the
/// photon-number relation.
using PumpDrive = std::variant<InputPower, PhotonNumber>;

struct PumpConfig {
  PumpScheme scheme = PumpScheme::Red;
  double delta = 0.0;
  PumpDrive drive = PhotonNumber{0.0};

  double pump_omega(const CavityParams& cav) const { return cav.omega_c + delta; }
};

/// 1 / (kappa/2 - i (Omega + Delta)).
Complex cavity_susceptibility(double probe_offset, double delta, double kappa);

/// Red: 1 / (Gamma_m/2 - i (Omega - Omega_m)); Blue: 1 / (Gamma_m/2 - i (Omega + Omega_m)).
Complex mechanical_susceptibility(double probe_offset, const MechanicalParams& mech, PumpScheme scheme);

/// n_cav = P_in kappa_ext |chi_c(omega_d)|^2 / (2 hbar omega_d), chi_c(omega_d) = 1/(kappa/2 - i Delta).
double photon_number_from_power(double watts, double delta, const CavityParams& cav);

/// Exact inverse of photon_number_from_power.
double power_from_photon_number(double n_cav, double delta, const CavityParams& cav);

/// Resolves the pump drive to a photon number.
double intracavity_photon_number(const PumpConfig& pump, const CavityParams& cav);

/// Largest imaginary part (rad/s) of the complex-Omega poles of S21, i.e. of
/// the roots of (kappa/2 - i(Omega+Delta)) (Gamma_m/2 - i(Omega -/+ Omega_m)) = -/+ g0^2 n.
/// With the e^{-i Omega t} convention a value >= 0 means the pumped mechanical
/// mode has no damped steady state (self-sustained oscillation).
double pole_growth_rate(double delta, double n_cav, PumpScheme scheme, const CavityParams& cav,
                        const MechanicalParams& mech);

/// S21 at omega_p = omega_c + Delta + Omega with the photon number already
/// resolved. Throws SingularDenominator when the denominator magnitude drops
/// below kSingularityGuard or when pole_growth_rate() >= 0.
Complex probe_transmission(double probe_offset, double delta, double n_cav, PumpScheme scheme,
                           const CavityParams& cav, const MechanicalParams& mech);

Complex probe_transmission(double probe_offset, const PumpConfig& pump, const CavityParams& cav,
                           const MechanicalParams& mech);

/// C = 4 g0^2 n_cav / (kappa Gamma_m).
double cooperativity(double g0, double n_cav, double kappa, double gamma_m);

/// Gamma_m (1 + C) for red, Gamma_m (1 - C) for blue. Zero or negative under
/// blue pumping means the mode is past threshold.
double effective_linewidth(const MechanicalParams& mech, double cooperativity, PumpScheme scheme);

enum class Stability { Stable, Unstable };

/// Unstable iff blue pumping with C >= 1.
Stability instability_check(const MechanicalParams& mech, double cooperativity, PumpScheme scheme);

}  // namespace omit
