#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace motlab::plots {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::vector<double> vertical_markers;  // e.g. stage boundaries
};

/// Standalone SVG document. Non-finite points (and nonpositive ones on a log
/// axis) break the polyline.
std::string render_line_chart(const LineChart& chart);

/// Heat map of a matrix with values in [0, 1], one cell per entry.
std::string render_heatmap(const Eigen::MatrixXd& values, const std::string& title,
                           const std::string& row_label, const std::string& col_label);

}  // namespace motlab::plots
