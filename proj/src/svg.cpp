#include "omit/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "omit/units.hpp"

namespace omit::svg {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kLeft = 80, kRight = 90, kTop = 40, kBottom = 60;
constexpr std::size_t kMaxCells = 200;

struct Rgb {
  double r, g, b;
};

// Viridis, sampled at five stops.
constexpr std::array<Rgb, 5> kStops = {{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};

std::string colour(double t) {
  t = std::clamp(t, 0.0, 1.0) * double(kStops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - double(i);
  auto mix = [&](double a, double b) { return static_cast<int>(std::lround(a + f * (b - a))); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(kStops[i].r, kStops[i + 1].r),
                mix(kStops[i].g, kStops[i + 1].g), mix(kStops[i].b, kStops[i + 1].b));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double display(double mag, bool db) { return db ? 20.0 * std::log10(std::max(mag, 1e-300)) : mag; }

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
}

void axes(std::ostringstream& os, double x0, double x1, double y0, double y1, const std::string& xlabel,
          const std::string& ylabel) {
  const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    const double px = kLeft + fx * pw, py = kTop + ph - fx * ph;
    os << "<text x=\"" << px << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << fmt(x0 + fx * (x1 - x0))
       << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << fmt(y0 + fx * (y1 - y0))
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
     << "</text>\n";
}

}  // namespace

std::string render_heatmap(const sweep::SweepMap& map, const HeatmapOptions& options) {
  std::ostringstream os;
  header(os, options.title);
  const std::size_t rows = map.rows(), cols = map.cols();
  if (rows == 0 || cols == 0) {
    os << "</svg>\n";
    return os.str();
  }
  const std::size_t rb = (rows + kMaxCells - 1) / kMaxCells, cb = (cols + kMaxCells - 1) / kMaxCells;
  const std::size_t out_rows = (rows + rb - 1) / rb, out_cols = (cols + cb - 1) / cb;

  std::vector<double> cells(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = r * rb; i < std::min(rows, (r + 1) * rb); ++i)
        for (std::size_t j = c * cb; j < std::min(cols, (c + 1) * cb); ++j, ++n) sum += map.at(i, j);
      cells[r * out_cols + c] = display(sum / double(n), options.db);
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(cells.begin(), cells.end());
  const double lo = *lo_it, hi = *hi_it > *lo_it ? *hi_it : *lo_it + 1.0;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double cw = pw / double(out_cols), ch = ph / double(out_rows);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      // first Delta row at the bottom
      os << "<rect x=\"" << fmt(kLeft + c * cw) << "\" y=\"" << fmt(kTop + ph - (r + 1) * ch) << "\" width=\""
         << fmt(cw + 0.05) << "\" height=\"" << fmt(ch + 0.05) << "\" fill=\""
         << colour((cells[r * out_cols + c] - lo) / (hi - lo)) << "\"/>\n";
    }
  }
  axes(os, to_hz(map.omega_axis.front() - options.omega_center), to_hz(map.omega_axis.back() - options.omega_center),
       to_hz(map.delta_axis.front() - options.delta_center) / 1e3,
       to_hz(map.delta_axis.back() - options.delta_center) / 1e3, "probe offset from sideband (Hz)",
       "pump detuning from sideband (kHz)");

  const double bx = kWidth - kRight + 20;
  for (int k = 0; k < 50; ++k) {
    os << "<rect x=\"" << bx << "\" y=\"" << fmt(kTop + ph - (k + 1) * ph / 50.0) << "\" width=\"14\" height=\""
       << fmt(ph / 50.0 + 0.05) << "\" fill=\"" << colour(k / 49.0) << "\"/>\n";
  }
  os << "<text x=\"" << bx + 18 << "\" y=\"" << kTop + ph << "\">" << fmt(lo) << "</text>\n";
  os << "<text x=\"" << bx + 18 << "\" y=\"" << kTop + 10 << "\">" << fmt(hi) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string render_traces(std::span<const sweep::SweepTrace> traces, const LineOptions& options) {
  std::ostringstream os;
  header(os, options.title);
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = to_hz(t.probe_absolute(i) - options.omega0);
      const double y = display(t.magnitude(i), options.db);
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  for (const auto& t : traces) {
    os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = to_hz(t.probe_absolute(i) - options.omega0);
      const double y = display(t.magnitude(i), options.db);
      os << fmt(kLeft + (x - x0) / (x1 - x0) * pw) << ',' << fmt(kTop + ph - (y - y0) / (y1 - y0) * ph) << ' ';
    }
    os << "\"/>\n";
  }
  if (!traces.empty())
    axes(os, x0, x1, y0, y1, "probe frequency - omega0 (Hz)", options.db ? "|S21| (dB)" : "|S21|");
  os << "</svg>\n";
  return os.str();
}

}  // namespace omit::svg
