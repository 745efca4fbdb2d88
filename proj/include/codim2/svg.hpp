#pragma once

// Minimal line-plot writer producing standalone SVG.

#include <string>
#include <vector>

namespace codim2::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotOptions {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  int width = 640, height = 420;
};

// Non-positive values are dropped on log axes.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace codim2::svg
