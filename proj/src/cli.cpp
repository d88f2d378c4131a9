#include "omit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <system_error>
#include <vector>

#include "omit/analysis.hpp"
#include "omit/errors.hpp"
#include "omit/fit.hpp"
#include "omit/io.hpp"
#include "omit/model.hpp"
#include "omit/svg.hpp"
#include "omit/sweep.hpp"
#include "omit/units.hpp"

namespace omit::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool db = false;
};

struct PumpOverrides {
  std::optional<std::string> scheme;
  std::optional<double> delta_hz;
  std::optional<double> n_cav;
  std::optional<double> power_dbm;
  std::optional<double> power_w;

  bool any() const { return scheme || delta_hz || n_cav || power_dbm || power_w; }
};

// Failure carrying its own exit code (for checks done in this file).
struct CommandError : std::runtime_error {
  CommandError(ExitCode code, const std::string& what) : std::runtime_error(what), code(code) {}
  ExitCode code;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

double shown(double mag, bool db) { return db ? 20.0 * std::log10(mag) : mag; }

io::RunConfig require_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  return io::load_config(g.config);
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw ConfigError("--out is required for this command");
  return g.out;
}

fs::path sibling(const fs::path& base, const std::string& suffix, const std::string& ext) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_" + suffix + ext);
  return p;
}

void write_output(const fs::path& path, const std::string& contents) {
  try {
    io::write_file_atomic(path, contents);
  } catch (const std::exception& e) {
    throw CommandError(kOutputError, "cannot write " + path.string() + ": " + e.what());
  }
}

std::vector<io::PumpSpec> resolve_pumps(const io::RunConfig& cfg, const PumpOverrides& o) {
  if (!o.any()) {
    if (cfg.pumps.empty()) throw ConfigError("no pumps configured; add 'pumps' to the config or pass --scheme/--ncav");
    return cfg.pumps;
  }
  io::PumpSpec p;
  if (!cfg.pumps.empty()) p = cfg.pumps.front();
  else {
    p.cavity = cfg.cavity;
    p.mechanics = cfg.mechanics;
    p.n_cav = 0.0;
  }
  if (o.scheme) {
    const PumpScheme s = parse_scheme(*o.scheme);
    if (s != p.scheme) {
      p.delta.reset();  // default detuning follows the scheme
      p.label.clear();
    }
    p.scheme = s;
  }
  if (o.delta_hz) p.delta = to_angular(*o.delta_hz);
  const int drives = int(o.n_cav.has_value()) + int(o.power_dbm.has_value()) + int(o.power_w.has_value());
  if (drives > 1) throw ConfigError("give at most one of --ncav, --power-dbm, --power-w");
  if (o.n_cav) {
    if (*o.n_cav < 0.0) throw ConfigError("--ncav must be non-negative");
    p.n_cav = *o.n_cav;
    p.power_watts.reset();
  }
  if (o.power_dbm) {
    p.power_watts = sweep::dbm_to_watts(*o.power_dbm);
    p.n_cav.reset();
  }
  if (o.power_w) {
    if (*o.power_w < 0.0) throw ConfigError("--power-w must be non-negative");
    p.power_watts = *o.power_w;
    p.n_cav.reset();
  }
  return {p};
}

std::string condition_name(const io::PumpSpec& p, std::size_t index) {
  return p.label.empty() ? std::to_string(index) : p.label;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  PumpOverrides pump;
  std::optional<std::size_t> steps;
  std::optional<double> noise;
  std::string svg;
};

int cmd_simulate(const Globals& g, const SimulateOptions& o, std::ostream& out) {
  const io::RunConfig cfg = require_config(g);
  const fs::path out_path = require_out(g);
  const std::vector<io::PumpSpec> pumps = resolve_pumps(cfg, o.pump);
  const std::size_t steps = o.steps.value_or(cfg.grid.pump_steps);
  const sweep::NoiseSpec noise{o.noise.value_or(cfg.noise.sigma), g.seed.value_or(cfg.noise.seed)};
  if (noise.sigma < 0.0) throw ConfigError("--noise must be non-negative");

  for (std::size_t k = 0; k < pumps.size(); ++k) {
    const io::PumpSpec& p = pumps[k];
    const PumpConfig pump{p.scheme, p.resolved_delta(), p.drive()};
    std::vector<sweep::SweepTrace> traces;
    try {
      if (steps > 1) {
        const sweep::ProtocolCondition condition{p.drive(), p.temperature_mK, p.probe_power_dbm, p.label};
        const sweep::ProtocolSettings settings{steps, cfg.grid.protocol_half_span_kappa,
                                               cfg.grid.line_half_width_gamma_eff, cfg.grid.points_per_sweep};
        traces = sweep::emulate_protocol(std::span(&condition, 1), p.scheme, p.cavity, p.mechanics, settings);
      } else {
        const auto grid =
            sweep::sideband_grid(pump, p.cavity, p.mechanics, cfg.grid.line_half_width_gamma_eff, cfg.grid.line_points);
        sweep::SweepTrace t = sweep::simulate_line_cut(pump, p.cavity, p.mechanics, grid);
        t.meta.temperature_mK = p.temperature_mK;
        t.meta.probe_power_dbm = p.probe_power_dbm;
        t.meta.label = p.label;
        if (p.power_watts && *p.power_watts > 0.0) t.meta.pump_power_dbm = sweep::watts_to_dbm(*p.power_watts);
        traces.push_back(std::move(t));
      }
    } catch (const SingularDenominator& e) {
      throw CommandError(kSingular, "condition '" + condition_name(p, k) + "': " + e.what());
    }
    for (std::size_t s = 0; s < traces.size(); ++s)
      traces[s] = sweep::add_noise(traces[s], {noise.sigma, noise.seed + 100000 * k + s});

    const fs::path path = pumps.size() == 1 ? out_path : sibling(out_path, condition_name(p, k), ".csv");
    write_output(path, io::format_dataset(traces));

    double lo = INFINITY, hi = -INFINITY;
    for (const auto& t : traces)
      for (std::size_t i = 0; i < t.size(); ++i) lo = std::min(lo, t.magnitude(i)), hi = std::max(hi, t.magnitude(i));
    out << path.string() << ": " << traces.size() << " sweep(s), |S21| " << (g.db ? "(dB) " : "") << "min "
        << num(shown(lo, g.db)) << " max " << num(shown(hi, g.db)) << '\n';

    if (!o.svg.empty()) {
      const fs::path svg_path = pumps.size() == 1 ? fs::path(o.svg) : sibling(o.svg, condition_name(p, k), ".svg");
      svg::LineOptions lo_opts{cfg.omega0.value_or(p.cavity.omega_c), g.db,
                               std::string(to_string(p.scheme)) + " pump"};
      write_output(svg_path, svg::render_traces(traces, lo_opts));
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- map

struct MapOptions {
  PumpOverrides pump;
  std::string svg;
};

int cmd_map(const Globals& g, const MapOptions& o, std::ostream& out) {
  const io::RunConfig cfg = require_config(g);
  const fs::path out_path = require_out(g);
  const io::PumpSpec p = resolve_pumps(cfg, o.pump).front();

  sweep::MapDrive drive;
  double n_for_grid;
  if (p.power_watts) {
    drive = {sweep::MapDriveMode::FixedInputPower, *p.power_watts};
    n_for_grid = photon_number_from_power(*p.power_watts, sideband_detuning(p.scheme, p.mechanics.omega_m), p.cavity);
  } else {
    drive = {sweep::MapDriveMode::FixedPhotonNumber, p.n_cav.value_or(0.0)};
    n_for_grid = drive.value;
  }
  const auto grids = sweep::default_map_grids(p.scheme, n_for_grid, p.cavity, p.mechanics, cfg.grid.map_delta_points,
                                              cfg.grid.map_omega_points, cfg.grid.map_delta_half_width_kappa,
                                              cfg.grid.map_omega_half_width_gamma_eff);
  sweep::SweepMap map;
  try {
    map = sweep::simulate_map(drive, p.scheme, p.cavity, p.mechanics, grids.delta, grids.omega);
  } catch (const SingularDenominator& e) {
    throw CommandError(kSingular, "map condition '" + condition_name(p, 0) + "': " + e.what());
  }
  map.meta.temperature_mK = p.temperature_mK;
  map.meta.probe_power_dbm = p.probe_power_dbm;
  write_output(out_path, io::format_map(map));

  const auto [lo, hi] = std::minmax_element(map.s21_mag.begin(), map.s21_mag.end());
  const std::size_t centre = map.rows() / 2;
  out << out_path.string() << ": " << map.rows() << " x " << map.cols() << " map, |S21| " << (g.db ? "(dB) " : "")
      << "min " << num(shown(*lo, g.db)) << " max " << num(shown(*hi, g.db)) << ", centre-row contrast "
      << num(sweep::feature_contrast(map.row(centre))) << '\n';

  if (!o.svg.empty()) {
    // Features centred at zero on both axes: Omega -/+ Omega_m, Delta +/- Omega_m.
    svg::HeatmapOptions opts{sideband_probe_offset(p.scheme, p.mechanics.omega_m),
                             sideband_detuning(p.scheme, p.mechanics.omega_m), g.db,
                             std::string(to_string(p.scheme)) + " pump |S21|"};
    write_output(o.svg, svg::render_heatmap(map, opts));
  }
  return kOk;
}

// ---------------------------------------------------------------- fit

std::string expand_group(std::string pattern, const io::DatasetFile& file, const fs::path& path) {
  auto replace = [&](const std::string& key, const std::string& value) {
    for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key, pos + value.size()))
      pattern.replace(pos, key.size(), value);
  };
  auto opt = [](const std::optional<double>& v) { return v ? io::format_number(*v) : std::string("unknown"); };
  replace("{temperature_mK}", opt(file.meta.temperature_mK));
  replace("{probe_power_dbm}", opt(file.meta.probe_power_dbm));
  replace("{scheme}", std::string(to_string(file.meta.scheme)));
  replace("{file}", path.filename().string());
  return pattern;
}

std::pair<double, double> default_bounds(fit::Param p, double init, const io::RunConfig& cfg) {
  switch (p) {
    case fit::Param::OmegaC: return {init - 2.0 * cfg.cavity.kappa, init + 2.0 * cfg.cavity.kappa};
    case fit::Param::OmegaM: return {init - 20.0 * cfg.mechanics.gamma_m, init + 20.0 * cfg.mechanics.gamma_m};
    case fit::Param::Kappa:
    case fit::Param::KappaExt: return {init / 4.0, init * 4.0};
    default: return {init / 10.0, init * 10.0};
  }
}

struct LoadedFit {
  fit::FitProblem problem;
  std::vector<io::DatasetFile> files;
};

LoadedFit build_problem(const io::RunConfig& cfg, const std::vector<std::string>& paths) {
  LoadedFit loaded;
  for (const std::string& path : paths) {
    io::DatasetFile file = io::read_dataset(path);

    std::vector<double> pumps;
    for (const auto& seg : file.segments) pumps.push_back(seg.meta.pump_omega);
    std::nth_element(pumps.begin(), pumps.begin() + long(pumps.size() / 2), pumps.end());
    const double pump_omega = pumps[pumps.size() / 2];

    fit::ParamValues init{};
    auto set = [&](fit::Param p, double v) { init[static_cast<std::size_t>(p)] = v; };
    auto get = [&](fit::Param p) { return init[static_cast<std::size_t>(p)]; };
    set(fit::Param::Kappa, cfg.cavity.kappa);
    set(fit::Param::KappaExt, cfg.cavity.kappa_ext);
    set(fit::Param::OmegaM, cfg.mechanics.omega_m);
    set(fit::Param::GammaM, cfg.mechanics.gamma_m);
    set(fit::Param::G0, cfg.mechanics.g0);
    // Pumping is assumed sideband-aligned when guessing the cavity resonance.
    set(fit::Param::OmegaC, pump_omega - sideband_detuning(file.meta.scheme, cfg.mechanics.omega_m));
    for (const auto& [p, spec] : cfg.fit.parameters)
      if (spec.init && p != fit::Param::NCav) set(p, *spec.init);

    double n_cav;
    if (const auto it = cfg.fit.parameters.find(fit::Param::NCav); it != cfg.fit.parameters.end() && it->second.init)
      n_cav = *it->second.init;
    else if (file.meta.n_cav)
      n_cav = *file.meta.n_cav;
    else if (file.meta.pump_power_dbm)
      n_cav = photon_number_from_power(sweep::dbm_to_watts(*file.meta.pump_power_dbm), pump_omega - get(fit::Param::OmegaC),
                                       {get(fit::Param::OmegaC), get(fit::Param::Kappa), get(fit::Param::KappaExt)});
    else
      throw ConfigError(path + ": dataset has neither n_cav nor pump_power_dbm");
    set(fit::Param::NCav, n_cav);

    fit::FitDataset ds;
    ds.name = path;
    ds.scheme = file.meta.scheme;
    ds.segments = file.segments;
    for (const fit::Param p : fit::kAllParams) {
      const auto it = cfg.fit.parameters.find(p);
      const io::BindingSpec spec = it != cfg.fit.parameters.end() ? it->second : io::BindingSpec{};
      const double v = get(p);
      const auto bounds = spec.bounds.value_or(default_bounds(p, v, cfg));
      switch (spec.mode) {
        case fit::BindingMode::Fixed: ds.binding(p) = fit::Binding::fixed(v); break;
        case fit::BindingMode::Free: ds.binding(p) = fit::Binding::free(v, bounds.first, bounds.second); break;
        case fit::BindingMode::Shared: {
          const std::string group = expand_group(spec.group, file, path);
          ds.binding(p) = fit::Binding::shared(group);
          loaded.problem.shared.try_emplace(group, fit::SharedParameter{v, bounds.first, bounds.second});
          break;
        }
      }
    }
    loaded.problem.datasets.push_back(std::move(ds));
    loaded.files.push_back(std::move(file));
  }
  return loaded;
}

double report_scale(fit::Param p) { return fit::is_frequency(p) ? 1.0 / kTwoPi : 1.0; }

std::string fit_report(const LoadedFit& loaded, const fit::FitResult& result) {
  nlohmann::ordered_json report;
  report["converged"] = result.converged;
  report["iterations"] = result.iterations;
  report["rms_residual"] = result.rms_residual;
  report["points"] = loaded.problem.points();
  report["frequency_unit"] = "Hz";

  auto entry = [](double value, double sigma, fit::Param p) {
    nlohmann::ordered_json e;
    e["value"] = value * report_scale(p);
    if (std::isfinite(sigma)) e["uncertainty"] = sigma * report_scale(p);
    else e["uncertainty"] = nullptr;
    return e;
  };

  nlohmann::ordered_json shared = nlohmann::ordered_json::array();
  for (const auto& fp : result.parameters) {
    if (fp.mode != fit::BindingMode::Shared) continue;
    nlohmann::ordered_json e = entry(fp.value, fp.uncertainty, fp.param);
    e["parameter"] = fit::param_name(fp.param);
    e["group"] = fp.group;
    shared.push_back(std::move(e));
  }
  report["shared"] = std::move(shared);

  nlohmann::ordered_json datasets = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (std::size_t d = 0; d < loaded.problem.datasets.size(); ++d) {
    const auto& ds = loaded.problem.datasets[d];
    const auto& meta = loaded.files[d].meta;
    nlohmann::ordered_json j;
    j["path"] = ds.name;
    j["scheme"] = to_string(ds.scheme);
    if (meta.temperature_mK) j["temperature_mK"] = *meta.temperature_mK;
    if (meta.probe_power_dbm) j["probe_power_dbm"] = *meta.probe_power_dbm;
    nlohmann::ordered_json params;
    for (const fit::Param p : fit::kAllParams) {
      nlohmann::ordered_json e = entry(result.value(d, p), result.uncertainty(d, p), p);
      e["mode"] = fit::mode_name(ds.binding(p).mode);
      if (ds.binding(p).mode == fit::BindingMode::Shared) e["group"] = ds.binding(p).group;
      params[std::string(fit::param_name(p))] = std::move(e);
    }
    j["parameters"] = std::move(params);
    const std::size_t n = ds.points();
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += result.final_residuals[offset + i] * result.final_residuals[offset + i];
    j["rms_residual"] = n ? std::sqrt(ss / double(n)) : 0.0;
    offset += n;
    datasets.push_back(std::move(j));
  }
  report["datasets"] = std::move(datasets);
  return report.dump(2) + "\n";
}

std::string residual_csv(const LoadedFit& loaded, const fit::FitResult& result) {
  std::ostringstream os;
  os << "dataset,probe_freq_hz,pump_freq_hz,s21_data,s21_model,residual\n";
  std::size_t k = 0;
  for (std::size_t d = 0; d < loaded.problem.datasets.size(); ++d) {
    const auto& ds = loaded.problem.datasets[d];
    for (const auto& seg : ds.segments) {
      for (std::size_t i = 0; i < seg.size(); ++i, ++k) {
        const double r = result.final_residuals[k];
        const double w = ds.weights.empty() ? 1.0 : ds.weights[k];
        os << ds.name << ',' << io::format_number(to_hz(seg.meta.pump_omega) + to_hz(seg.probe_offset(i))) << ','
           << io::format_number(to_hz(seg.meta.pump_omega)) << ',' << io::format_number(seg.magnitude(i)) << ','
           << io::format_number(seg.magnitude(i) + r / w) << ',' << io::format_number(r) << '\n';
      }
    }
  }
  return os.str();
}

int cmd_fit(const Globals& g, const std::vector<std::string>& datasets, const std::string& residual_path,
            std::ostream& out) {
  const io::RunConfig cfg = require_config(g);
  const fs::path out_path = require_out(g);
  if (datasets.empty()) throw ConfigError("fit needs at least one dataset");
  const LoadedFit loaded = build_problem(cfg, datasets);

  fit::FitOptions options;
  options.max_iterations = cfg.fit.max_iterations;
  const fit::FitResult result = fit::fit(loaded.problem, options);

  write_output(out_path, fit_report(loaded, result));
  const fs::path res_path = residual_path.empty() ? sibling(out_path, "residuals", ".csv") : fs::path(residual_path);
  write_output(res_path, residual_csv(loaded, result));

  out << "fit " << (result.converged ? "converged" : "did NOT converge") << " after " << result.iterations
      << " iterations, rms residual " << num(result.rms_residual) << '\n';
  for (const auto& fp : result.parameters) {
    out << "  " << fit::param_name(fp.param);
    if (fp.mode == fit::BindingMode::Shared) out << " [" << fp.group << "]";
    else out << " [" << loaded.problem.datasets[*fp.dataset].name << "]";
    out << " = " << num(fp.value * report_scale(fp.param)) << " +- " << num(fp.uncertainty * report_scale(fp.param))
        << (fit::is_frequency(fp.param) ? " Hz" : "") << '\n';
  }
  out << "report: " << out_path.string() << ", residuals: " << res_path.string() << '\n';
  return result.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------- photons

int cmd_photons(const Globals& g, const PumpOverrides& o, std::ostream& out) {
  const io::RunConfig cfg = require_config(g);
  if (o.power_dbm.has_value() == o.power_w.has_value()) throw ConfigError("give exactly one of --power-dbm, --power-w");
  const double watts = o.power_dbm ? sweep::dbm_to_watts(*o.power_dbm) : *o.power_w;
  if (!(watts >= 0.0)) throw ConfigError("pump power must be non-negative");
  const PumpScheme scheme = o.scheme ? parse_scheme(*o.scheme) : PumpScheme::Red;
  const double delta = o.delta_hz ? to_angular(*o.delta_hz) : sideband_detuning(scheme, cfg.mechanics.omega_m);

  const double n_cav = photon_number_from_power(watts, delta, cfg.cavity);
  const double c = cooperativity(cfg.mechanics.g0, n_cav, cfg.cavity.kappa, cfg.mechanics.gamma_m);
  out << "pump_power_w: " << num(watts) << '\n';
  out << "delta_hz: " << num(to_hz(delta)) << '\n';
  out << "n_cav: " << num(n_cav) << '\n';
  out << "cooperativity: " << num(c) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- linewidth

int cmd_linewidth(const Globals& g, const std::string& path, std::ostream& out) {
  const io::DatasetFile file = io::read_dataset(path);
  // The best-aligned pump step carries the strongest feature.
  const sweep::SweepTrace* best = &file.segments.front();
  for (const auto& seg : file.segments)
    if (sweep::feature_contrast(seg) > sweep::feature_contrast(*best)) best = &seg;

  const double width = fit::extract_linewidth(*best);
  out << "fwhm_hz: " << num(to_hz(width)) << '\n';
  if (!g.config.empty()) {
    const io::RunConfig cfg = io::load_config(g.config);
    const double ratio = width / cfg.mechanics.gamma_m;
    const double c = file.meta.scheme == PumpScheme::Red ? ratio - 1.0 : 1.0 - ratio;
    out << "cooperativity: " << num(c) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- convert

int cmd_convert(const std::optional<double>& dbm, const std::optional<double>& watts, std::ostream& out) {
  if (dbm.has_value() == watts.has_value()) throw ConfigError("give exactly one of --dbm, --watts");
  if (dbm) {
    out << "watts: " << num(sweep::dbm_to_watts(*dbm)) << '\n';
  } else {
    if (!(*watts > 0.0)) throw ConfigError("--watts must be positive");
    out << "dbm: " << num(sweep::watts_to_dbm(*watts)) << '\n';
  }
  return kOk;
}

void add_pump_options(CLI::App* cmd, PumpOverrides& o, bool with_drive_ncav = true) {
  cmd->add_option("--scheme", o.scheme, "Pump scheme: red or blue");
  cmd->add_option("--delta-hz", o.delta_hz, "Pump detuning omega_d - omega_c in Hz (default: sideband)");
  if (with_drive_ncav) cmd->add_option("--ncav", o.n_cav, "Intracavity pump photon number");
  cmd->add_option("--power-dbm", o.power_dbm, "Pump power at the device input, dBm");
  cmd->add_option("--power-w", o.power_w, "Pump power at the device input, W");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-tone optomechanics workbench: simulate, map and fit probe transmission", "omitwb"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Noise seed (overrides the config)");
  app.add_option("--out", g.out, "Output path");
  app.add_flag("--db", g.db, "Show |S21| in dB in printed summaries and plots");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Write synthetic dataset files");
  add_pump_options(simulate, sim.pump);
  simulate->add_option("--steps", sim.steps, "Pump steps (>1 emulates the stepped-pump protocol)");
  simulate->add_option("--noise", sim.noise, "Gaussian noise sigma per quadrature");
  simulate->add_option("--svg", sim.svg, "Also write an SVG line plot");

  MapOptions mapo;
  auto* map = app.add_subcommand("map", "Write an (Omega, Delta) transmission map");
  add_pump_options(map, mapo.pump);
  map->add_option("--svg", mapo.svg, "Also write an SVG heatmap");

  std::vector<std::string> fit_paths;
  std::string residual_path;
  auto* fitc = app.add_subcommand("fit", "Fit datasets jointly");
  fitc->add_option("datasets", fit_paths, "Dataset CSV files")->required();
  fitc->add_option("--residuals", residual_path, "Residual CSV path (default: <out>_residuals.csv)");

  PumpOverrides photons_opts;
  auto* photons = app.add_subcommand("photons", "Intracavity photon number for a pump power");
  add_pump_options(photons, photons_opts, false);

  std::string lw_path;
  auto* linewidth = app.add_subcommand("linewidth", "Numeric FWHM of the optomechanical feature");
  linewidth->add_option("dataset", lw_path, "Dataset CSV file")->required();

  std::optional<double> conv_dbm, conv_watts;
  auto* convert = app.add_subcommand("convert", "Convert between dBm and W");
  convert->add_option("--dbm", conv_dbm, "Power in dBm");
  convert->add_option("--watts", conv_watts, "Power in W");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out, help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    err << help_err.str();
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(g, sim, out);
    if (map->parsed()) return cmd_map(g, mapo, out);
    if (fitc->parsed()) return cmd_fit(g, fit_paths, residual_path, out);
    if (photons->parsed()) return cmd_photons(g, photons_opts, out);
    if (linewidth->parsed()) return cmd_linewidth(g, lw_path, out);
    if (convert->parsed()) return cmd_convert(conv_dbm, conv_watts, out);
    err << "error: no command\n";
    return kConfigError;
  } catch (const CommandError& e) {
    err << "error: " << e.what() << '\n';
    return e.code;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SingularDenominator& e) {
    err << "error: " << e.what() << '\n';
    return kSingular;
  } catch (const InsufficientData& e) {
    err << "error: " << e.what() << '\n';
    return kInsufficientData;
  } catch (const FeatureNotFound& e) {
    err << "error: " << e.what() << '\n';
    return kFeatureNotFound;
  } catch (const UnderResolved& e) {
    err << "error: " << e.what() << '\n';
    return kFeatureNotFound;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace omit::cli
