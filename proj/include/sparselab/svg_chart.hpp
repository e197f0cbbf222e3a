#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sparselab {

/// One line on a chart; y_lo/y_hi (when non-empty) draw a shaded band.
struct ChartSeries {
  std::string label;
  std::vector<double> x, y, y_lo, y_hi;
};

struct ChartSpec {
  std::string title, x_label, y_label;
  bool log_x = false;
  bool clamp_unit_y = false;  // force the y axis to [0, 1]
};

/// Deterministic standalone SVG line chart (fixed palette, fixed layout).
void write_svg_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                          const std::vector<ChartSeries>& series);

}  // namespace sparselab
