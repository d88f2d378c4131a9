#pragma once

// Synthetic probe sweeps: dense line cuts, (Omega, Delta) maps and the
// stepped-pump / narrow-probe measurement protocol.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omit/errors.hpp"
#include "omit/model.hpp"

namespace omit::sweep {

enum class AxisKind {
  ProbeOffset,    // Omega = omega_p - omega_d
  AbsoluteProbe,  // omega_p
};

enum class SampleKind {
  Complex,    // full complex S21
  Magnitude,  // |S21| only, stored in the real part
};

struct TraceMeta {
  PumpScheme scheme = PumpScheme::Red;
  double pump_omega = 0.0;  // absolute omega_d, rad/s
  double delta = 0.0;       // omega_d - omega_c at generation time, rad/s
  std::optional<double> n_cav;
  std::optional<double> pump_power_dbm;
  std::optional<double> temperature_mK;
  std::optional<double> probe_power_dbm;
  std::string label;
  bool magnitude_noise = false;  // noise was added to |S21| rather than per quadrature
};

struct SweepTrace {
  AxisKind axis_kind = AxisKind::ProbeOffset;
  SampleKind sample_kind = SampleKind::Complex;
  std::vector<double> omega;
  std::vector<Complex> s21;
  TraceMeta meta;

  std::size_t size() const { return omega.size(); }
  double magnitude(std::size_t i) const;
  double probe_offset(std::size_t i) const;
  double probe_absolute(std::size_t i) const;
  std::vector<double> magnitudes() const;

  /// Strictly increasing axis, matching lengths, finite non-negative magnitudes.
  void validate() const;
};

struct SweepMap {
  std::vector<double> delta_axis;
  std::vector<double> omega_axis;
  std::vector<double> s21_mag;  // row-major, delta rows x omega columns
  TraceMeta meta;

  std::size_t rows() const { return delta_axis.size(); }
  std::size_t cols() const { return omega_axis.size(); }
  double at(std::size_t row, std::size_t col) const { return s21_mag[row * cols() + col]; }
  std::span<const double> row(std::size_t r) const { return {s21_mag.data() + r * cols(), cols()}; }
};

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// n points from lo to hi inclusive. n == 1 gives {(lo + hi) / 2}.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// n points over centre +- half_width. For odd n the middle point is exactly
/// centre, so a map row and a line cut built around the same centre agree bit
/// for bit.
std::vector<double> centered_grid(double centre, double half_width, std::size_t n);

/// Errors from inside a sweep: the model singularity plus the grid point it happened at.
class SweepSingularity : public SingularDenominator {
 public:
  SweepSingularity(const SingularDenominator& cause, std::string where);
  const std::string& where() const { return where_; }
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  std::string where_;
  std::string message_;
};

SweepTrace simulate_line_cut(const PumpConfig& pump, const CavityParams& cav, const MechanicalParams& mech,
                             std::span<const double> omega_grid);

/// Probe grid centred on the mechanical sideband, +-half_width_gamma_eff
/// effective linewidths. Falls back to Gamma_m when Gamma_eff <= 0.
std::vector<double> sideband_grid(const PumpConfig& pump, const CavityParams& cav, const MechanicalParams& mech,
                                  double half_width_gamma_eff = 25.0, std::size_t points = 2001);

enum class MapDriveMode {
  FixedPhotonNumber,  // same n_cav on every Delta row
  FixedInputPower,    // n_cav recomputed per row from P_in
};

struct MapDrive {
  MapDriveMode mode = MapDriveMode::FixedPhotonNumber;
  double value = 0.0;  // n_cav or watts
};

SweepMap simulate_map(const MapDrive& drive, PumpScheme scheme, const CavityParams& cav,
                      const MechanicalParams& mech, std::span<const double> delta_grid,
                      std::span<const double> omega_grid);

struct MapGrids {
  std::vector<double> delta;
  std::vector<double> omega;
};

/// Delta within +-delta_half_width_kappa * kappa of the sideband detuning,
/// Omega within +-omega_half_width_gamma_eff * Gamma_eff of the sideband offset.
MapGrids default_map_grids(PumpScheme scheme, double n_cav, const CavityParams& cav, const MechanicalParams& mech,
                           std::size_t delta_points = 201, std::size_t omega_points = 401,
                           double delta_half_width_kappa = 2.0, double omega_half_width_gamma_eff = 25.0);

struct ProtocolCondition {
  PumpDrive drive = PhotonNumber{0.0};
  std::optional<double> temperature_mK;
  std::optional<double> probe_power_dbm;
  std::string label;
};

struct ProtocolSettings {
  std::size_t pump_steps = 41;
  double detuning_half_span_kappa = 2.0;  // pump steps cover sideband detuning +- this * kappa
  double sweep_half_width_gamma_eff = 25.0;
  std::size_t points_per_sweep = 201;
};

/// One narrow probe sweep per pump step per condition, each centred on the
/// sideband omega_d +- Omega_m. Conditions are emitted in order, pump steps
/// in increasing Delta.
std::vector<SweepTrace> emulate_protocol(std::span<const ProtocolCondition> conditions, PumpScheme scheme,
                                         const CavityParams& cav, const MechanicalParams& mech,
                                         const ProtocolSettings& settings);

/// Additive white Gaussian noise, sigma per quadrature. Magnitude-only traces
/// get noise on |S21| directly (folded to stay non-negative) and are flagged.
SweepTrace add_noise(const SweepTrace& trace, const NoiseSpec& noise);

/// Visibility (max - min) / (max + min) of |S21| over the trace.
double feature_contrast(const SweepTrace& trace);
double feature_contrast(std::span<const double> magnitudes);

double dbm_to_watts(double dbm);
/// Throws std::domain_error for watts <= 0.
double watts_to_dbm(double watts);

}  // namespace omit::sweep
