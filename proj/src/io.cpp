#include "omit/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "omit/errors.hpp"
#include "omit/units.hpp"

namespace omit::io {

using nlohmann::json;

namespace {

constexpr const char* kColumns = "probe_freq_hz,pump_freq_hz,s21_mag";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void write_meta(std::ostringstream& os, const sweep::TraceMeta& meta) {
  os << "# scheme: " << to_string(meta.scheme) << '\n';
  if (meta.temperature_mK) os << "# temperature_mK: " << format_number(*meta.temperature_mK) << '\n';
  if (meta.probe_power_dbm) os << "# probe_power_dbm: " << format_number(*meta.probe_power_dbm) << '\n';
  if (meta.pump_power_dbm) os << "# pump_power_dbm: " << format_number(*meta.pump_power_dbm) << '\n';
  if (meta.n_cav) os << "# n_cav: " << format_number(*meta.n_cav) << '\n';
  if (!meta.label.empty()) os << "# label: " << meta.label << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---- config helpers ----

class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : node_.items())
      if (!allowed.contains(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& raw(const char* key) const { return node_.at(key); }
  std::string where(const char* key) const { return path_ + "." + key; }

  std::optional<double> number(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where(key) + ": must be finite");
    return x;
  }

  double required(const char* key) const {
    const auto v = number(key);
    if (!v) throw ConfigError(path_ + ": missing '" + key + "'");
    return *v;
  }

  std::optional<std::size_t> count(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = node_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where(key) + ": expected a non-negative integer");
    return static_cast<std::size_t>(v.get<long long>());
  }

  std::optional<std::string> text(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

 private:
  const json& node_;
  std::string path_;
};

void apply_cavity(const Section& s, double unit, CavityParams& cav) {
  if (auto v = s.number("omega_c")) cav.omega_c = *v * unit;
  if (auto v = s.number("omega_c_shift")) cav.omega_c += *v * unit;
  if (auto v = s.number("kappa")) cav.kappa = *v * unit;
  if (auto v = s.number("kappa_ext")) cav.kappa_ext = *v * unit;
}

void apply_mechanics(const Section& s, double unit, MechanicalParams& mech) {
  if (auto v = s.number("omega_m")) mech.omega_m = *v * unit;
  if (auto v = s.number("omega_m_shift")) mech.omega_m += *v * unit;
  if (auto v = s.number("gamma_m")) mech.gamma_m = *v * unit;
  if (auto v = s.number("g0")) mech.g0 = *v * unit;
}

fit::BindingMode parse_mode(const std::string& text, const std::string& where) {
  if (text == "fixed") return fit::BindingMode::Fixed;
  if (text == "free") return fit::BindingMode::Free;
  if (text == "shared") return fit::BindingMode::Shared;
  throw ConfigError(where + ": mode must be fixed, free or shared");
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_dataset(std::span<const sweep::SweepTrace> traces) {
  if (traces.empty()) throw ConfigError("no traces to write");
  for (const auto& t : traces)
    if (t.meta.scheme != traces.front().meta.scheme) throw ConfigError("traces in one dataset must share a scheme");

  std::ostringstream os;
  write_meta(os, traces.front().meta);
  os << kColumns << '\n';
  for (const auto& t : traces) {
    const double pump_hz = to_hz(t.meta.pump_omega);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double probe_hz = pump_hz + to_hz(t.probe_offset(i));
      os << format_number(probe_hz) << ',' << format_number(pump_hz) << ',' << format_number(t.magnitude(i)) << '\n';
    }
  }
  return os.str();
}

void write_dataset(const std::filesystem::path& path, std::span<const sweep::SweepTrace> traces) {
  write_file_atomic(path, format_dataset(traces));
}

DatasetFile parse_dataset(std::istream& in) {
  DatasetFile file;
  std::optional<PumpScheme> scheme;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::optional<double> last_pump_hz, last_probe_hz;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string body = trim(std::string_view(t).substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) continue;  // free-form comment
      const std::string key = trim(std::string_view(body).substr(0, colon));
      const std::string value = trim(std::string_view(body).substr(colon + 1));
      auto numeric = [&](std::optional<double>& slot) {
        const auto v = parse_double(value);
        if (!v || !std::isfinite(*v)) throw ParseError("line " + std::to_string(line_no) + ": '" + key + "' is not a number", line_no);
        slot = *v;
      };
      if (key == "scheme") {
        try {
          scheme = parse_scheme(value);
        } catch (const ConfigError& e) {
          throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
      } else if (key == "temperature_mK") numeric(file.meta.temperature_mK);
      else if (key == "probe_power_dbm") numeric(file.meta.probe_power_dbm);
      else if (key == "pump_power_dbm") numeric(file.meta.pump_power_dbm);
      else if (key == "n_cav") numeric(file.meta.n_cav);
      else if (key == "label") file.meta.label = value;
      else file.extra_header[key] = value;
      continue;
    }
    if (!header_seen && t.rfind("probe_freq_hz", 0) == 0) {
      if (t != kColumns) throw ParseError("line " + std::to_string(line_no) + ": expected columns " + kColumns, line_no);
      header_seen = true;
      continue;
    }

    const auto fields = split(t, ',');
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields, found " + std::to_string(fields.size()), line_no);
    std::array<double, 3> v{};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto x = parse_double(fields[k]);
      if (!x || !std::isfinite(*x))
        throw ParseError("line " + std::to_string(line_no) + ": field " + std::to_string(k + 1) + " is not a finite number", line_no);
      v[k] = *x;
    }
    if (v[2] < 0.0) throw ParseError("line " + std::to_string(line_no) + ": negative s21_mag", line_no);

    if (!last_pump_hz || *last_pump_hz != v[1]) {
      sweep::SweepTrace seg;
      seg.axis_kind = sweep::AxisKind::ProbeOffset;
      seg.sample_kind = sweep::SampleKind::Magnitude;
      seg.meta = file.meta;
      seg.meta.pump_omega = to_angular(v[1]);
      file.segments.push_back(std::move(seg));
      last_pump_hz = v[1];
      last_probe_hz.reset();
    }
    if (last_probe_hz && !(v[0] > *last_probe_hz))
      throw ParseError("line " + std::to_string(line_no) + ": probe frequency must increase within a pump step", line_no);
    last_probe_hz = v[0];
    auto& seg = file.segments.back();
    seg.omega.push_back(to_angular(v[0] - v[1]));
    seg.s21.emplace_back(v[2], 0.0);
  }

  if (!scheme) throw ParseError("missing '# scheme: red|blue' header", 0);
  if (file.segments.empty()) throw ParseError("no data rows", 0);
  file.meta.scheme = *scheme;
  for (auto& seg : file.segments) {
    const double pump = seg.meta.pump_omega;
    seg.meta = file.meta;
    seg.meta.pump_omega = pump;
  }
  return file;
}

DatasetFile read_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  try {
    return parse_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string format_map(const sweep::SweepMap& map) {
  std::ostringstream os;
  os << "# scheme: " << to_string(map.meta.scheme) << '\n';
  if (map.meta.n_cav) os << "# n_cav: " << format_number(*map.meta.n_cav) << '\n';
  if (map.meta.pump_power_dbm) os << "# pump_power_dbm: " << format_number(*map.meta.pump_power_dbm) << '\n';
  if (map.meta.temperature_mK) os << "# temperature_mK: " << format_number(*map.meta.temperature_mK) << '\n';
  if (map.meta.probe_power_dbm) os << "# probe_power_dbm: " << format_number(*map.meta.probe_power_dbm) << '\n';
  os << "# rows: pump detuning Delta (Hz); columns: probe offset Omega (Hz); values: |S21|\n";
  os << "delta_hz\\omega_hz";
  for (const double w : map.omega_axis) os << ',' << format_number(to_hz(w));
  os << '\n';
  for (std::size_t r = 0; r < map.rows(); ++r) {
    os << format_number(to_hz(map.delta_axis[r]));
    for (const double v : map.row(r)) os << ',' << format_number(v);
    os << '\n';
  }
  return os.str();
}

void write_map(const std::filesystem::path& path, const sweep::SweepMap& map) {
  write_file_atomic(path, format_map(map));
}

sweep::SweepMap read_map(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  sweep::SweepMap map;
  std::string line;
  std::size_t line_no = 0;
  bool axis_read = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto colon = t.find(':');
      if (colon != std::string::npos && trim(std::string_view(t).substr(1, colon - 1)) == "scheme")
        map.meta.scheme = parse_scheme(trim(std::string_view(t).substr(colon + 1)));
      continue;
    }
    const auto fields = split(t, ',');
    if (!axis_read) {
      for (std::size_t k = 1; k < fields.size(); ++k) {
        const auto v = parse_double(fields[k]);
        if (!v) throw ParseError("line " + std::to_string(line_no) + ": bad Omega axis value", line_no);
        map.omega_axis.push_back(to_angular(*v));
      }
      axis_read = true;
      continue;
    }
    if (fields.size() != map.omega_axis.size() + 1)
      throw ParseError("line " + std::to_string(line_no) + ": row length does not match the Omega axis", line_no);
    const auto delta = parse_double(fields[0]);
    if (!delta) throw ParseError("line " + std::to_string(line_no) + ": bad Delta value", line_no);
    map.delta_axis.push_back(to_angular(*delta));
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto v = parse_double(fields[k]);
      if (!v) throw ParseError("line " + std::to_string(line_no) + ": bad |S21| value", line_no);
      map.s21_mag.push_back(*v);
    }
  }
  return map;
}

PumpDrive PumpSpec::drive() const {
  if (power_watts) return InputPower{*power_watts};
  return PhotonNumber{n_cav.value_or(0.0)};
}

FitSettings default_fit_settings() {
  FitSettings s;
  s.parameters[fit::Param::OmegaC] = {fit::BindingMode::Free, {}, std::nullopt, std::nullopt};
  s.parameters[fit::Param::Kappa] = {fit::BindingMode::Free, {}, std::nullopt, std::nullopt};
  s.parameters[fit::Param::KappaExt] = {fit::BindingMode::Fixed, {}, std::nullopt, std::nullopt};
  s.parameters[fit::Param::OmegaM] = {fit::BindingMode::Shared, "omega_m@{temperature_mK}", std::nullopt, std::nullopt};
  s.parameters[fit::Param::GammaM] = {fit::BindingMode::Shared, "gamma_m@{temperature_mK}", std::nullopt, std::nullopt};
  s.parameters[fit::Param::G0] = {fit::BindingMode::Fixed, {}, std::nullopt, std::nullopt};
  s.parameters[fit::Param::NCav] = {fit::BindingMode::Fixed, {}, std::nullopt, std::nullopt};
  return s;
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const Section top(root, "config");
  top.allow({"frequency_unit", "cavity", "mechanics", "pumps", "grid", "noise", "fit", "display"});

  double unit = kTwoPi;
  if (const auto u = top.text("frequency_unit")) {
    if (*u == "Hz" || *u == "hz") unit = kTwoPi;
    else if (*u == "rad/s") unit = 1.0;
    else throw ConfigError("config.frequency_unit: expected \"Hz\" or \"rad/s\"");
  }

  RunConfig cfg;
  if (!top.has("cavity")) throw ConfigError("config: missing 'cavity'");
  if (!top.has("mechanics")) throw ConfigError("config: missing 'mechanics'");
  {
    const Section s(top.raw("cavity"), "config.cavity");
    s.allow({"omega_c", "kappa", "kappa_ext"});
    cfg.cavity = {s.required("omega_c") * unit, s.required("kappa") * unit, s.required("kappa_ext") * unit};
    cfg.cavity.validate();
  }
  {
    const Section s(top.raw("mechanics"), "config.mechanics");
    s.allow({"omega_m", "gamma_m", "g0"});
    cfg.mechanics = {s.required("omega_m") * unit, s.required("gamma_m") * unit, s.required("g0") * unit};
    cfg.mechanics.validate();
  }

  if (top.has("pumps")) {
    const json& list = top.raw("pumps");
    if (!list.is_array()) throw ConfigError("config.pumps: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "config.pumps[" + std::to_string(i) + "]";
      const Section s(list[i], where);
      s.allow({"scheme", "delta", "n_cav", "power_dbm", "power_w", "temperature_mK", "probe_power_dbm", "label",
               "cavity", "mechanics"});
      PumpSpec p;
      const auto scheme = s.text("scheme");
      if (!scheme) throw ConfigError(where + ": missing 'scheme'");
      p.scheme = parse_scheme(*scheme);
      if (auto v = s.number("delta")) p.delta = *v * unit;
      p.n_cav = s.number("n_cav");
      const auto dbm = s.number("power_dbm");
      const auto watts = s.number("power_w");
      const int drives = int(p.n_cav.has_value()) + int(dbm.has_value()) + int(watts.has_value());
      if (drives != 1) throw ConfigError(where + ": give exactly one of n_cav, power_dbm, power_w");
      if (p.n_cav && *p.n_cav < 0.0) throw ConfigError(where + ".n_cav: must be non-negative");
      if (watts && *watts < 0.0) throw ConfigError(where + ".power_w: must be non-negative");
      if (dbm) p.power_watts = sweep::dbm_to_watts(*dbm);
      if (watts) p.power_watts = *watts;
      p.temperature_mK = s.number("temperature_mK");
      p.probe_power_dbm = s.number("probe_power_dbm");
      p.label = s.text("label").value_or("");
      p.cavity = cfg.cavity;
      p.mechanics = cfg.mechanics;
      if (s.has("cavity")) {
        const Section c(s.raw("cavity"), where + ".cavity");
        c.allow({"omega_c", "omega_c_shift", "kappa", "kappa_ext"});
        apply_cavity(c, unit, p.cavity);
      }
      if (s.has("mechanics")) {
        const Section m(s.raw("mechanics"), where + ".mechanics");
        m.allow({"omega_m", "omega_m_shift", "gamma_m", "g0"});
        apply_mechanics(m, unit, p.mechanics);
      }
      p.cavity.validate();
      p.mechanics.validate();
      cfg.pumps.push_back(std::move(p));
    }
  }

  if (top.has("grid")) {
    const Section s(top.raw("grid"), "config.grid");
    s.allow({"line_points", "line_half_width_gamma_eff", "map_delta_points", "map_omega_points",
             "map_delta_half_width_kappa", "map_omega_half_width_gamma_eff", "pump_steps", "points_per_sweep",
             "protocol_half_span_kappa"});
    GridSettings& g = cfg.grid;
    g.line_points = s.count("line_points").value_or(g.line_points);
    g.line_half_width_gamma_eff = s.number("line_half_width_gamma_eff").value_or(g.line_half_width_gamma_eff);
    g.map_delta_points = s.count("map_delta_points").value_or(g.map_delta_points);
    g.map_omega_points = s.count("map_omega_points").value_or(g.map_omega_points);
    g.map_delta_half_width_kappa = s.number("map_delta_half_width_kappa").value_or(g.map_delta_half_width_kappa);
    g.map_omega_half_width_gamma_eff =
        s.number("map_omega_half_width_gamma_eff").value_or(g.map_omega_half_width_gamma_eff);
    g.pump_steps = s.count("pump_steps").value_or(g.pump_steps);
    g.points_per_sweep = s.count("points_per_sweep").value_or(g.points_per_sweep);
    g.protocol_half_span_kappa = s.number("protocol_half_span_kappa").value_or(g.protocol_half_span_kappa);
    if (g.line_points < 2 || g.map_delta_points < 1 || g.map_omega_points < 2 || g.pump_steps < 1 ||
        g.points_per_sweep < 2)
      throw ConfigError("config.grid: point counts too small");
    if (!(g.line_half_width_gamma_eff > 0.0) || !(g.map_delta_half_width_kappa > 0.0) ||
        !(g.map_omega_half_width_gamma_eff > 0.0) || !(g.protocol_half_span_kappa > 0.0))
      throw ConfigError("config.grid: widths must be positive");
  }

  if (top.has("noise")) {
    const Section s(top.raw("noise"), "config.noise");
    s.allow({"sigma", "seed"});
    cfg.noise.sigma = s.number("sigma").value_or(0.0);
    if (cfg.noise.sigma < 0.0) throw ConfigError("config.noise.sigma: must be non-negative");
    cfg.noise.seed = s.count("seed").value_or(0);
  }

  cfg.fit = default_fit_settings();
  if (top.has("fit")) {
    const Section s(top.raw("fit"), "config.fit");
    s.allow({"parameters", "max_iterations"});
    cfg.fit.max_iterations = s.count("max_iterations").value_or(cfg.fit.max_iterations);
    if (s.has("parameters")) {
      const json& params = s.raw("parameters");
      if (!params.is_object()) throw ConfigError("config.fit.parameters: expected an object");
      for (const auto& [name, node] : params.items()) {
        const std::string where = "config.fit.parameters." + name;
        const fit::Param p = fit::parse_param(name);
        const Section b(node, where);
        b.allow({"mode", "group", "init", "bounds"});
        BindingSpec spec;
        const auto mode = b.text("mode");
        if (!mode) throw ConfigError(where + ": missing 'mode'");
        spec.mode = parse_mode(*mode, where);
        const double scale = fit::is_frequency(p) ? unit : 1.0;
        if (auto v = b.number("init")) spec.init = *v * scale;
        if (b.has("bounds")) {
          const json& bounds = b.raw("bounds");
          if (!bounds.is_array() || bounds.size() != 2 || !bounds[0].is_number() || !bounds[1].is_number())
            throw ConfigError(where + ".bounds: expected [lo, hi]");
          spec.bounds = std::pair{bounds[0].get<double>() * scale, bounds[1].get<double>() * scale};
          if (!(spec.bounds->first < spec.bounds->second)) throw ConfigError(where + ".bounds: need lo < hi");
        }
        if (spec.mode == fit::BindingMode::Shared) {
          spec.group = b.text("group").value_or(std::string(name) + "@{temperature_mK}");
        } else if (b.has("group")) {
          throw ConfigError(where + ": 'group' only applies to shared parameters");
        }
        cfg.fit.parameters[p] = std::move(spec);
      }
    }
  }

  if (top.has("display")) {
    const Section s(top.raw("display"), "config.display");
    s.allow({"omega0"});
    if (auto v = s.number("omega0")) cfg.omega0 = *v * unit;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace omit::io
