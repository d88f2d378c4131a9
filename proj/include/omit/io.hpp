#pragma once

// File formats of the workbench: dataset CSV (one pump condition per file,
// one or more pump steps), map matrix CSV and the JSON run configuration.
// Frequencies in files are Hz; everything handed back to the library is rad/s.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omit/fit.hpp"
#include "omit/sweep.hpp"

namespace omit::io {

/// Shortest decimal representation that round-trips exactly.
std::string format_number(double value);

/// Writes to a temporary next to path and renames over it.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct DatasetFile {
  sweep::TraceMeta meta;  // header values; pump_omega/delta unused
  std::vector<sweep::SweepTrace> segments;  // split wherever pump_freq_hz changes
  std::map<std::string, std::string> extra_header;
};

/// Header comments (# key: value), column header, then
/// probe_freq_hz,pump_freq_hz,s21_mag rows. All traces must share one scheme.
std::string format_dataset(std::span<const sweep::SweepTrace> traces);
void write_dataset(const std::filesystem::path& path, std::span<const sweep::SweepTrace> traces);

/// Throws ParseError (with 1-based line) on malformed input.
DatasetFile parse_dataset(std::istream& in);
DatasetFile read_dataset(const std::filesystem::path& path);

/// First row: corner label then the Omega axis (Hz); following rows: Delta
/// (Hz) then |S21| for each Omega.
std::string format_map(const sweep::SweepMap& map);
void write_map(const std::filesystem::path& path, const sweep::SweepMap& map);
sweep::SweepMap read_map(const std::filesystem::path& path);

struct PumpSpec {
  PumpScheme scheme = PumpScheme::Red;
  std::optional<double> delta;  // rad/s; default is the sideband detuning
  std::optional<double> n_cav;
  std::optional<double> power_watts;
  std::optional<double> temperature_mK;
  std::optional<double> probe_power_dbm;
  std::string label;
  CavityParams cavity;         // global values with per-pump overrides applied
  MechanicalParams mechanics;  // likewise

  double resolved_delta() const { return delta.value_or(sideband_detuning(scheme, mechanics.omega_m)); }
  PumpDrive drive() const;
};

struct GridSettings {
  std::size_t line_points = 2001;  // ~40 samples across the feature FWHM
  double line_half_width_gamma_eff = 25.0;
  std::size_t map_delta_points = 201;
  std::size_t map_omega_points = 401;
  double map_delta_half_width_kappa = 2.0;
  double map_omega_half_width_gamma_eff = 25.0;
  std::size_t pump_steps = 1;
  std::size_t points_per_sweep = 201;
  double protocol_half_span_kappa = 2.0;
};

struct BindingSpec {
  fit::BindingMode mode = fit::BindingMode::Fixed;
  std::string group;  // may contain {temperature_mK}, {probe_power_dbm}, {scheme}, {file}
  std::optional<double> init;  // rad/s for frequencies
  std::optional<std::pair<double, double>> bounds;
};

struct FitSettings {
  std::map<fit::Param, BindingSpec> parameters;
  std::size_t max_iterations = 200;
};

struct RunConfig {
  CavityParams cavity;
  MechanicalParams mechanics;
  std::vector<PumpSpec> pumps;
  GridSettings grid;
  sweep::NoiseSpec noise;
  FitSettings fit;
  std::optional<double> omega0;  // display offset for figure output, rad/s
};

/// Default bindings: omega_c, kappa free per dataset; omega_m, gamma_m shared
/// per temperature; kappa_ext, g0, n_cav fixed.
FitSettings default_fit_settings();

/// Validates against the schema: unknown keys, wrong types and invalid
/// physical values raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace omit::io
