#pragma once

#include <span>
#include <string>

#include "omit/sweep.hpp"

namespace omit::svg {

struct HeatmapOptions {
  double omega_center = 0.0;  // subtracted from the Omega axis for display (rad/s)
  double delta_center = 0.0;  // subtracted from the Delta axis for display (rad/s)
  bool db = false;
  std::string title;
};

/// Self-contained SVG heatmap, fixed viridis-like colormap, axes in kHz/Hz.
/// Large maps are block-averaged down to at most 200 x 200 cells.
std::string render_heatmap(const sweep::SweepMap& map, const HeatmapOptions& options);

struct LineOptions {
  double omega0 = 0.0;  // absolute probe offset subtracted on the x axis (rad/s)
  bool db = false;
  std::string title;
};

/// |S21| against omega_p - omega0 for each trace.
std::string render_traces(std::span<const sweep::SweepTrace> traces, const LineOptions& options);

}  // namespace omit::svg
