#include "omit/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "omit/errors.hpp"
#include "omit/units.hpp"

namespace omit {

namespace {

constexpr Complex kI{0.0, 1.0};

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

namespace {

std::string singular_message(double probe_offset, double delta, double magnitude) {
  char buf[200];
  if (magnitude == 0.0)
    std::snprintf(buf, sizeof buf,
                  "pump is at or beyond the parametric instability (Omega/2pi = %.10g Hz, Delta/2pi = %.10g Hz)",
                  to_hz(probe_offset), to_hz(delta));
  else
    std::snprintf(buf, sizeof buf, "S21 denominator |d| = %.3g below guard at Omega/2pi = %.10g Hz, Delta/2pi = %.10g Hz",
                  magnitude, to_hz(probe_offset), to_hz(delta));
  return buf;
}

}  // namespace

SingularDenominator::SingularDenominator(double probe_offset, double delta, double magnitude)
    : std::runtime_error(singular_message(probe_offset, delta, magnitude)),
      probe_offset_(probe_offset),
      delta_(delta),
      magnitude_(magnitude) {}

void CavityParams::validate() const {
  if (!positive_finite(omega_c)) throw ConfigError("cavity: omega_c must be positive");
  if (!positive_finite(kappa)) throw ConfigError("cavity: kappa must be positive");
  if (!positive_finite(kappa_ext) || kappa_ext > kappa)
    throw ConfigError("cavity: kappa_ext must satisfy 0 < kappa_ext <= kappa");
}

void MechanicalParams::validate() const {
  if (!positive_finite(omega_m)) throw ConfigError("mechanics: omega_m must be positive");
  if (!positive_finite(gamma_m)) throw ConfigError("mechanics: gamma_m must be positive");
  if (!std::isfinite(g0) || g0 < 0.0) throw ConfigError("mechanics: g0 must be non-negative");
}

std::string_view to_string(PumpScheme scheme) { return scheme == PumpScheme::Red ? "red" : "blue"; }

PumpScheme parse_scheme(std::string_view text) {
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "red") return PumpScheme::Red;
  if (lower == "blue") return PumpScheme::Blue;
  throw ConfigError("unknown pump scheme '" + std::string(text) + "' (expected red or blue)");
}

Complex cavity_susceptibility(double probe_offset, double delta, double kappa) {
  return 1.0 / (kappa / 2.0 - kI * (probe_offset + delta));
}

Complex mechanical_susceptibility(double probe_offset, const MechanicalParams& mech, PumpScheme scheme) {
  const double detuning = scheme == PumpScheme::Red ? probe_offset - mech.omega_m : probe_offset + mech.omega_m;
  return 1.0 / (mech.gamma_m / 2.0 - kI * detuning);
}

double photon_number_from_power(double watts, double delta, const CavityParams& cav) {
  const double chi_sq = 1.0 / (cav.kappa * cav.kappa / 4.0 + delta * delta);
  return watts * cav.kappa_ext * chi_sq / (2.0 * kHbar * (cav.omega_c + delta));
}

double power_from_photon_number(double n_cav, double delta, const CavityParams& cav) {
  const double chi_sq = 1.0 / (cav.kappa * cav.kappa / 4.0 + delta * delta);
  return n_cav * 2.0 * kHbar * (cav.omega_c + delta) / (cav.kappa_ext * chi_sq);
}

double intracavity_photon_number(const PumpConfig& pump, const CavityParams& cav) {
  if (const auto* n = std::get_if<PhotonNumber>(&pump.drive)) return n->count;
  return photon_number_from_power(std::get<InputPower>(pump.drive).watts, pump.delta, cav);
}

double pole_growth_rate(double delta, double n_cav, PumpScheme scheme, const CavityParams& cav,
                        const MechanicalParams& mech) {
  // Poles sit at Omega = a and Omega = b for g0 = 0; coupling splits them:
  // (Omega - a)(Omega - b) = sign * g0^2 n.
  const Complex a{-delta, -cav.kappa / 2.0};
  const Complex b{sideband_probe_offset(scheme, mech.omega_m), -mech.gamma_m / 2.0};
  const Complex half_sum = (a + b) / 2.0;
  const Complex half_diff = (a - b) / 2.0;
  const Complex root = std::sqrt(half_diff * half_diff + coupling_sign(scheme) * mech.g0 * mech.g0 * n_cav);
  return std::max((half_sum + root).imag(), (half_sum - root).imag());
}

Complex probe_transmission(double probe_offset, double delta, double n_cav, PumpScheme scheme,
                           const CavityParams& cav, const MechanicalParams& mech) {
  if (n_cav > 0.0 && !(pole_growth_rate(delta, n_cav, scheme, cav, mech) < 0.0))
    throw SingularDenominator(probe_offset, delta, 0.0);
  const Complex chi_c = cavity_susceptibility(probe_offset, delta, cav.kappa);
  const Complex chi_m = mechanical_susceptibility(probe_offset, mech, scheme);
  const Complex denominator = 1.0 + coupling_sign(scheme) * mech.g0 * mech.g0 * n_cav * chi_c * chi_m;
  const double magnitude = std::abs(denominator);
  if (!(magnitude >= kSingularityGuard)) throw SingularDenominator(probe_offset, delta, magnitude);
  return 1.0 - chi_c * (cav.kappa_ext / 2.0) / denominator;
}

Complex probe_transmission(double probe_offset, const PumpConfig& pump, const CavityParams& cav,
                           const MechanicalParams& mech) {
  return probe_transmission(probe_offset, pump.delta, intracavity_photon_number(pump, cav), pump.scheme, cav,
                            mech);
}

double cooperativity(double g0, double n_cav, double kappa, double gamma_m) {
  return 4.0 * g0 * g0 * n_cav / (kappa * gamma_m);
}

double effective_linewidth(const MechanicalParams& mech, double cooperativity, PumpScheme scheme) {
  return mech.gamma_m * (1.0 + coupling_sign(scheme) * cooperativity);
}

Stability instability_check(const MechanicalParams& /*mech*/, double cooperativity, PumpScheme scheme) {
  return scheme == PumpScheme::Blue && cooperativity >= 1.0 ? Stability::Unstable : Stability::Stable;
}

}  // namespace omit
