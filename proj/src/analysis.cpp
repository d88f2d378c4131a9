#include "omit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "omit/errors.hpp"

namespace omit::fit {

namespace {

// Below this a deviation from the background is treated as absent even on
// noiseless data (cavity curvature across a narrow sweep sits well under it).
constexpr double kRelativeFloor = 1e-3;
constexpr std::size_t kMinSamplesAcrossWidth = 20;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::vector<double> axis_of(const sweep::SweepTrace& trace) {
  std::vector<double> x(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) x[i] = trace.probe_offset(i);
  return x;
}

struct Background {
  double x0, y0, slope;
  double at(double x) const { return y0 + slope * (x - x0); }
};

// Line through the means of the first and last edge-sized chunks.
Background edge_background(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t edge = std::max<std::size_t>(3, n / 20);
  auto mean = [](std::span<const double> s) { return std::accumulate(s.begin(), s.end(), 0.0) / double(s.size()); };
  const double xl = mean(x.first(edge)), yl = mean(y.first(edge));
  const double xr = mean(x.last(edge)), yr = mean(y.last(edge));
  return {xl, yl, (yr - yl) / (xr - xl)};
}

// Position where series d (relative to its peak value at k) falls to half,
// walking from k in direction dir. nullopt if the edge is reached first.
std::optional<double> half_crossing(std::span<const double> x, std::span<const double> d, std::size_t k, int dir) {
  const double half = d[k] / 2.0;
  std::size_t i = k;
  while (true) {
    if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == d.size())) return std::nullopt;
    const std::size_t j = dir < 0 ? i - 1 : i + 1;
    if (d[j] / half <= 1.0) {
      const double t = (d[i] - half) / (d[i] - d[j]);
      return x[i] + t * (x[j] - x[i]);
    }
    i = j;
  }
}

}  // namespace

double noise_estimate(std::span<const double> values) {
  if (values.size() < 3) return 0.0;
  std::vector<double> diffs(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) diffs[i] = values[i + 1] - values[i];
  const double centre = median(diffs);
  for (double& v : diffs) v = std::abs(v - centre);
  return 1.4826 * median(diffs) / std::sqrt(2.0);
}

InitialGuess init_heuristics(const sweep::SweepTrace& trace) {
  const std::size_t n = trace.size();
  if (n < 8) throw FeatureNotFound("trace too short for initial estimates");
  const std::vector<double> x = axis_of(trace);
  const std::vector<double> mag = trace.magnitudes();
  const double noise = noise_estimate(mag);

  std::vector<double> power(n);
  for (std::size_t i = 0; i < n; ++i) power[i] = mag[i] * mag[i];

  // Moving average over ~1% of the trace, at least 3 samples.
  const std::size_t half_window = std::max<std::size_t>(1, n / 200);
  auto smoothed = [&](const std::vector<double>& v) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= half_window ? i - half_window : 0;
      const std::size_t hi = std::min(n - 1, i + half_window);
      out[i] = std::accumulate(v.begin() + lo, v.begin() + hi + 1, 0.0) / double(hi - lo + 1);
    }
    return out;
  };
  const std::vector<double> smooth = smoothed(power);

  InitialGuess guess;
  const std::size_t edge = std::max<std::size_t>(3, n / 20);
  const double level = std::max(std::accumulate(smooth.begin(), smooth.begin() + edge, 0.0),
                                std::accumulate(smooth.end() - edge, smooth.end(), 0.0)) /
                       double(edge);
  const auto min_it = std::min_element(smooth.begin(), smooth.end());
  const std::size_t k_min = static_cast<std::size_t>(min_it - smooth.begin());
  const double notch_depth = std::sqrt(std::max(level, 0.0)) - std::sqrt(std::max(*min_it, 0.0));

  std::vector<double> dip(n);
  for (std::size_t i = 0; i < n; ++i) dip[i] = level - smooth[i];
  const auto left = half_crossing(x, dip, k_min, -1);
  const auto right = half_crossing(x, dip, k_min, +1);
  if (left && right && dip[k_min] > 0.0) {
    guess.kappa = *right - *left;
    guess.omega_c = trace.probe_absolute(k_min);
  }

  // Single noisy samples must not pass for a feature.
  const std::vector<double> smooth_mag = smoothed(mag);
  const Background bg = edge_background(x, smooth_mag);
  std::size_t k_feat = 0;
  double feat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = smooth_mag[i] - bg.at(x[i]);
    if (std::abs(d) > std::abs(feat)) {
      feat = d;
      k_feat = i;
    }
  }

  const double threshold = std::max(3.0 * noise, 1e-4);
  const bool notch_found = guess.kappa.has_value() && notch_depth >= threshold;
  const bool feature_found = std::abs(feat) >= threshold;
  if (!notch_found) {
    guess.kappa.reset();
    guess.omega_c.reset();
  }
  if (feature_found) guess.feature_center = x[k_feat];
  if (!notch_found && !feature_found) throw FeatureNotFound("no notch or feature above 3x the noise estimate");
  return guess;
}

double extract_linewidth(const sweep::SweepTrace& trace) {
  const std::size_t n = trace.size();
  if (n < 8) throw UnderResolved("trace too short to measure a linewidth");
  const std::vector<double> x = axis_of(trace);
  std::vector<double> power(n);
  for (std::size_t i = 0; i < n; ++i) power[i] = trace.magnitude(i) * trace.magnitude(i);

  const Background bg = edge_background(x, power);
  std::vector<double> d(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = power[i] - bg.at(x[i]);
    if (std::abs(d[i]) > std::abs(d[k])) k = i;
  }

  const double noise = noise_estimate(power);
  const double floor = kRelativeFloor * std::max(std::abs(bg.at(x[k])), 1e-12);
  if (std::abs(d[k]) < std::max(3.0 * noise, floor))
    throw FeatureNotFound("no optomechanical feature above the background");

  const auto left = half_crossing(x, d, k, -1);
  const auto right = half_crossing(x, d, k, +1);
  if (!left || !right) throw UnderResolved("half-contrast points lie outside the trace");

  const auto inside = std::count_if(x.begin(), x.end(), [&](double v) { return v >= *left && v <= *right; });
  if (static_cast<std::size_t>(inside) < kMinSamplesAcrossWidth)
    throw UnderResolved("only " + std::to_string(inside) + " samples across the feature width");
  return *right - *left;
}

}  // namespace omit::fit
