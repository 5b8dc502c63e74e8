#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prefaudit::svg {

// Minimal deterministic SVG charts: fixed canvas, fixed palette, numbers
// printed with fixed precision, no timestamps.

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool step = false;     // draw as a right-continuous step function
  bool markers = true;
  bool dashed = false;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::optional<Range> x_range;
  std::optional<Range> y_range;
  std::vector<Series> series;
};

struct Bar {
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;
};

struct BarChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Bar> bars;
  std::optional<Range> x_range;
  // Drawn on top of the bars, e.g. a threshold or the identity diagonal.
  std::vector<Series> overlays;
  std::optional<Range> y_range;
};

std::string render(const LineChart& chart);
std::string render(const BarChart& chart);

std::string escape(const std::string& text);

}  // namespace prefaudit::svg
