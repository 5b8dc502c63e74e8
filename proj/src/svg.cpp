#include "prefaudit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace prefaudit::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr int kTicks = 5;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

struct Frame {
  Range x;
  Range y;
  bool log_x = false;

  double px(double v) const {
    double lo = x.lo, hi = x.hi;
    if (log_x) {
      v = std::log2(v);
      lo = std::log2(lo);
      hi = std::log2(hi);
    }
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return kLeft + t * (kWidth - kLeft - kRight);
  }
  double py(double v) const {
    const double t = y.hi > y.lo ? (v - y.lo) / (y.hi - y.lo) : 0.5;
    return kHeight - kBottom - t * (kHeight - kTop - kBottom);
  }
};

Range padded(double lo, double hi) {
  if (!(lo < hi)) {
    const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.1 : 0.5;
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void open_svg(std::string& out, const std::string& title) {
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
         num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" "
         "font-size=\"15\">" + escape(title) + "</text>\n";
}

void axes(std::string& out, const Frame& f, const std::string& x_label,
          const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom, y1 = kTop;
  out += "<g stroke=\"#333\" fill=\"none\">\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) +
         "\" y2=\"" + num(y0) + "\"/>\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) +
         "\" y2=\"" + num(y1) + "\"/>\n";
  out += "</g>\n<g fill=\"#333\">\n";
  for (int i = 0; i <= kTicks; ++i) {
    const double t = static_cast<double>(i) / kTicks;
    double xv;
    if (f.log_x) {
      xv = std::exp2(std::log2(f.x.lo) + t * (std::log2(f.x.hi) - std::log2(f.x.lo)));
    } else {
      xv = f.x.lo + t * (f.x.hi - f.x.lo);
    }
    const double yv = f.y.lo + t * (f.y.hi - f.y.lo);
    out += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(y0 + 18) +
           "\" text-anchor=\"middle\">" + tick_label(xv) + "</text>\n";
    out += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(f.py(yv) + 4) +
           "\" text-anchor=\"end\">" + tick_label(yv) + "</text>\n";
  }
  out += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 18) +
         "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 " + num((y0 + y1) / 2) + ")\">" + escape(y_label) +
         "</text>\n</g>\n";
}

void draw_series(std::string& out, const Frame& f, const Series& s,
                 const char* color) {
  if (s.points.empty()) return;
  std::string path;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto [x, y] = s.points[i];
    if (i == 0) {
      path += "M" + num(f.px(x)) + " " + num(f.py(y));
    } else if (s.step) {
      path += " H" + num(f.px(x)) + " V" + num(f.py(y));
    } else {
      path += " L" + num(f.px(x)) + " " + num(f.py(y));
    }
  }
  out += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") +
         "/>\n";
  if (s.markers) {
    for (const auto& [x, y] : s.points) {
      out += "<circle cx=\"" + num(f.px(x)) + "\" cy=\"" + num(f.py(y)) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
  }
}

void legend(std::string& out, const std::vector<Series>& series, std::size_t offset) {
  double y = kTop + 10;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].label.empty()) continue;
    const char* color = kPalette[(i + offset) % std::size(kPalette)];
    const double x = kWidth - kRight + 15;
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) +
           "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    out += "<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 1) + "\">" +
           escape(series[i].label) + "</text>\n";
    y += 18;
  }
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render(const LineChart& chart) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  Frame f;
  f.log_x = chart.log_x && xlo > 0.0;
  f.x = chart.x_range ? *chart.x_range : (f.log_x ? Range{xlo, xhi} : padded(xlo, xhi));
  if (f.log_x && !(f.x.lo < f.x.hi)) f.x = {f.x.lo / 2, f.x.hi * 2};
  f.y = chart.y_range ? *chart.y_range : padded(ylo, yhi);

  std::string out;
  open_svg(out, chart.title);
  axes(out, f, chart.x_label, chart.y_label);
  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    draw_series(out, f, chart.series[i], kPalette[i % std::size(kPalette)]);
  }
  legend(out, chart.series, 0);
  out += "</svg>\n";
  return out;
}

std::string render(const BarChart& chart) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double yhi = 0.0;
  for (const auto& b : chart.bars) {
    xlo = std::min(xlo, b.lo);
    xhi = std::max(xhi, b.hi);
    yhi = std::max(yhi, b.value);
  }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1;
  Frame f;
  f.x = chart.x_range ? *chart.x_range : Range{xlo, xhi};
  f.y = chart.y_range ? *chart.y_range : Range{0.0, yhi > 0 ? yhi * 1.05 : 1.0};

  std::string out;
  open_svg(out, chart.title);
  axes(out, f, chart.x_label, chart.y_label);
  out += "<g fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\">\n";
  for (const auto& b : chart.bars) {
    if (b.value <= 0.0) continue;
    const double x0 = f.px(b.lo), x1 = f.px(b.hi);
    const double y0 = f.py(b.value), y1 = f.py(f.y.lo);
    out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" +
           num(std::max(0.0, x1 - x0)) + "\" height=\"" + num(std::max(0.0, y1 - y0)) +
           "\"/>\n";
  }
  out += "</g>\n";
  for (std::size_t i = 0; i < chart.overlays.size(); ++i) {
    draw_series(out, f, chart.overlays[i], kPalette[(i + 3) % std::size(kPalette)]);
  }
  legend(out, chart.overlays, 3);
  out += "</svg>\n";
  return out;
}

}  // namespace prefaudit::svg
