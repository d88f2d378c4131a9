#include "omit/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "omit/errors.hpp"
#include "omit/units.hpp"

namespace omit::sweep {

namespace {

void require_increasing(std::span<const double> grid, const char* name) {
  if (grid.empty()) throw ConfigError(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw ConfigError(std::string(name) + " grid has a non-finite entry");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError(std::string(name) + " grid is not strictly increasing");
  }
}

std::string describe_point(double omega, double delta) {
  std::ostringstream os;
  os.precision(10);
  os << "Omega/2pi = " << to_hz(omega) << " Hz, Delta/2pi = " << to_hz(delta) << " Hz";
  return os.str();
}

double resolved_gamma_eff(PumpScheme scheme, double n_cav, const CavityParams& cav, const MechanicalParams& mech) {
  const double c = cooperativity(mech.g0, n_cav, cav.kappa, mech.gamma_m);
  const double width = effective_linewidth(mech, c, scheme);
  return width > 0.0 ? width : mech.gamma_m;
}

}  // namespace

double SweepTrace::magnitude(std::size_t i) const {
  return sample_kind == SampleKind::Complex ? std::abs(s21[i]) : s21[i].real();
}

double SweepTrace::probe_offset(std::size_t i) const {
  return axis_kind == AxisKind::ProbeOffset ? omega[i] : omega[i] - meta.pump_omega;
}

double SweepTrace::probe_absolute(std::size_t i) const {
  return axis_kind == AxisKind::AbsoluteProbe ? omega[i] : meta.pump_omega + omega[i];
}

std::vector<double> SweepTrace::magnitudes() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = magnitude(i);
  return out;
}

void SweepTrace::validate() const {
  require_increasing(omega, "trace axis");
  if (s21.size() != omega.size()) throw ConfigError("trace: sample count does not match axis length");
  for (std::size_t i = 0; i < size(); ++i) {
    const double m = magnitude(i);
    if (!std::isfinite(m) || m < 0.0) throw ConfigError("trace: non-finite or negative magnitude");
  }
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {(lo + hi) / 2.0};
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

std::vector<double> centered_grid(double centre, double half_width, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {centre};
  std::vector<double> out(n);
  const double last = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = centre + half_width * ((2.0 * static_cast<double>(i) - last) / last);
  return out;
}

SweepSingularity::SweepSingularity(const SingularDenominator& cause, std::string where)
    : SingularDenominator(cause), where_(std::move(where)) {
  message_ = cause.what();
}

SweepTrace simulate_line_cut(const PumpConfig& pump, const CavityParams& cav, const MechanicalParams& mech,
                             std::span<const double> omega_grid) {
  require_increasing(omega_grid, "probe");
  const double n_cav = intracavity_photon_number(pump, cav);

  SweepTrace trace;
  trace.axis_kind = AxisKind::ProbeOffset;
  trace.sample_kind = SampleKind::Complex;
  trace.omega.assign(omega_grid.begin(), omega_grid.end());
  trace.s21.resize(omega_grid.size());
  trace.meta.scheme = pump.scheme;
  trace.meta.pump_omega = pump.pump_omega(cav);
  trace.meta.delta = pump.delta;
  trace.meta.n_cav = n_cav;

  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    try {
      trace.s21[i] = probe_transmission(omega_grid[i], pump.delta, n_cav, pump.scheme, cav, mech);
    } catch (const SingularDenominator& e) {
      throw SweepSingularity(e, describe_point(omega_grid[i], pump.delta));
    }
  }
  return trace;
}

std::vector<double> sideband_grid(const PumpConfig& pump, const CavityParams& cav, const MechanicalParams& mech,
                                  double half_width_gamma_eff, std::size_t points) {
  const double width = resolved_gamma_eff(pump.scheme, intracavity_photon_number(pump, cav), cav, mech);
  const double centre = sideband_probe_offset(pump.scheme, mech.omega_m);
  return centered_grid(centre, half_width_gamma_eff * width, points);
}

SweepMap simulate_map(const MapDrive& drive, PumpScheme scheme, const CavityParams& cav,
                      const MechanicalParams& mech, std::span<const double> delta_grid,
                      std::span<const double> omega_grid) {
  require_increasing(delta_grid, "detuning");
  require_increasing(omega_grid, "probe");
  if (!(drive.value >= 0.0)) throw ConfigError("map drive must be non-negative");

  SweepMap map;
  map.delta_axis.assign(delta_grid.begin(), delta_grid.end());
  map.omega_axis.assign(omega_grid.begin(), omega_grid.end());
  map.s21_mag.resize(delta_grid.size() * omega_grid.size());
  map.meta.scheme = scheme;
  if (drive.mode == MapDriveMode::FixedPhotonNumber) map.meta.n_cav = drive.value;
  else if (drive.value > 0.0) map.meta.pump_power_dbm = watts_to_dbm(drive.value);

  for (std::size_t r = 0; r < delta_grid.size(); ++r) {
    const double delta = delta_grid[r];
    const double n_cav = drive.mode == MapDriveMode::FixedPhotonNumber
                             ? drive.value
                             : photon_number_from_power(drive.value, delta, cav);
    for (std::size_t c = 0; c < omega_grid.size(); ++c) {
      try {
        map.s21_mag[r * omega_grid.size() + c] =
            std::abs(probe_transmission(omega_grid[c], delta, n_cav, scheme, cav, mech));
      } catch (const SingularDenominator& e) {
        throw SweepSingularity(e, describe_point(omega_grid[c], delta));
      }
    }
  }
  return map;
}

MapGrids default_map_grids(PumpScheme scheme, double n_cav, const CavityParams& cav, const MechanicalParams& mech,
                           std::size_t delta_points, std::size_t omega_points, double delta_half_width_kappa,
                           double omega_half_width_gamma_eff) {
  const double delta0 = sideband_detuning(scheme, mech.omega_m);
  const double omega0 = sideband_probe_offset(scheme, mech.omega_m);
  const double width = resolved_gamma_eff(scheme, n_cav, cav, mech);
  MapGrids grids;
  grids.delta = centered_grid(delta0, delta_half_width_kappa * cav.kappa, delta_points);
  grids.omega = centered_grid(omega0, omega_half_width_gamma_eff * width, omega_points);
  return grids;
}

std::vector<SweepTrace> emulate_protocol(std::span<const ProtocolCondition> conditions, PumpScheme scheme,
                                         const CavityParams& cav, const MechanicalParams& mech,
                                         const ProtocolSettings& settings) {
  if (settings.pump_steps == 0) throw ConfigError("protocol needs at least one pump step");
  if (settings.points_per_sweep < 2) throw ConfigError("protocol sweeps need at least two points");
  if (settings.pump_steps > 1 && settings.detuning_half_span_kappa < 1.0)
    throw ConfigError("protocol pump steps must span at least omega_c +- kappa");

  const double delta0 = sideband_detuning(scheme, mech.omega_m);
  const double span = settings.detuning_half_span_kappa * cav.kappa;
  const std::vector<double> deltas = centered_grid(delta0, span, settings.pump_steps);

  std::vector<SweepTrace> traces;
  traces.reserve(conditions.size() * deltas.size());
  for (const ProtocolCondition& condition : conditions) {
    for (const double delta : deltas) {
      PumpConfig pump{scheme, delta, condition.drive};
      const std::vector<double> grid =
          sideband_grid(pump, cav, mech, settings.sweep_half_width_gamma_eff, settings.points_per_sweep);
      SweepTrace trace = simulate_line_cut(pump, cav, mech, grid);
      trace.meta.temperature_mK = condition.temperature_mK;
      trace.meta.probe_power_dbm = condition.probe_power_dbm;
      trace.meta.label = condition.label;
      if (const auto* power = std::get_if<InputPower>(&condition.drive); power && power->watts > 0.0)
        trace.meta.pump_power_dbm = watts_to_dbm(power->watts);
      traces.push_back(std::move(trace));
    }
  }
  return traces;
}

SweepTrace add_noise(const SweepTrace& trace, const NoiseSpec& noise) {
  if (!(noise.sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (noise.sigma == 0.0) return trace;

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, noise.sigma);
  SweepTrace out = trace;
  if (trace.sample_kind == SampleKind::Complex) {
    for (Complex& s : out.s21) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      s += Complex(re, im);
    }
  } else {
    for (Complex& s : out.s21) s = Complex(std::abs(s.real() + gauss(rng)), 0.0);
    out.meta.magnitude_noise = true;
  }
  return out;
}

double feature_contrast(std::span<const double> magnitudes) {
  if (magnitudes.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(magnitudes.begin(), magnitudes.end());
  const double sum = *hi + *lo;
  return sum > 0.0 ? (*hi - *lo) / sum : 0.0;
}

double feature_contrast(const SweepTrace& trace) {
  const std::vector<double> mags = trace.magnitudes();
  return feature_contrast(mags);
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double watts_to_dbm(double watts) {
  if (!(watts > 0.0)) throw std::domain_error("watts_to_dbm: power must be positive");
  return 10.0 * std::log10(watts / 1e-3);
}

}  // namespace omit::sweep
