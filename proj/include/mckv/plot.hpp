#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace mckv {

enum class PlotKind { flow_mean_band, residual_history, torus_heatmap };

/// Numbers behind a plot.
///   flow_mean_band:   x = times, y = means, lower/upper = band edges
///   residual_history: y = residual per iterate (x defaults to 1..n), reference = tolerance line
///   torus_heatmap:    values row-major rows x cols, x and y give the axis extents
struct PlotData {
  std::string title;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lower;
  std::vector<double> upper;
  double reference = std::numeric_limits<double>::quiet_NaN();
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

struct PlotOutput {
  std::string svg;
  /// exactly the plotted numbers
  std::string csv;
};

/// Renders a standalone SVG and its CSV twin. Throws ConstructionError on an empty series.
PlotOutput render_plot(const PlotData& data, PlotKind kind);

}  // namespace mckv
