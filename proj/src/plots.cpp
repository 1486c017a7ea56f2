#include "motlab/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace motlab::plots {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" "
         "fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                 const char* extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" " + extra + ">" +
         escape(s) + "</text>\n";
}

}  // namespace

std::string render_line_chart(const LineChart& chart) {
  auto ok = [&](double y) { return std::isfinite(y) && (!chart.log_y || y > 0); };
  auto ty = [&](double y) { return chart.log_y ? std::log10(y) : y; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ok(s.y[i]) || !std::isfinite(s.x[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string svg = header(kWidth, kHeight);
  svg += text(kWidth / 2 - kRight / 2 + kLeft / 2, 22, chart.title, "middle", "font-size=\"14\"");
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" +
         num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    svg += text(px(xv), kTop + ph + 16, tick(xv));
    const double yv = y0 + (y1 - y0) * k / 5.0;
    svg += text(kLeft - 6, py(yv) + 4, tick(chart.log_y ? std::pow(10.0, yv) : yv), "end");
  }
  svg += text(kLeft + pw / 2, kHeight - 10, chart.x_label);
  svg += "<text x=\"16\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(kTop + ph / 2) + ")\">" + escape(chart.y_label + (chart.log_y ? " (log)" : "")) + "</text>\n";

  for (double m : chart.vertical_markers) {
    if (m < x0 || m > x1) continue;
    svg += "<line x1=\"" + num(px(m)) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(px(m)) + "\" y2=\"" +
           num(kTop + ph) + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ok(s.y[i]) || !std::isfinite(s.x[i])) {
        flush();
        continue;
      }
      pts += num(px(s.x[i])) + "," + num(py(ty(s.y[i]))) + " ";
    }
    flush();
    const double ly = kTop + 14 + 18 * static_cast<double>(si);
    svg += "<line x1=\"" + num(kWidth - kRight + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(kWidth - kRight + 32) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += text(kWidth - kRight + 38, ly, s.name, "start");
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_heatmap(const Eigen::MatrixXd& values, const std::string& title,
                           const std::string& row_label, const std::string& col_label) {
  const double cell = 28;
  const double left = 60, top = 50;
  const double w = left + cell * static_cast<double>(values.cols()) + 30;
  const double h = top + cell * static_cast<double>(values.rows()) + 50;
  std::string svg = header(w, h);
  svg += text(w / 2, 22, title, "middle", "font-size=\"14\"");
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    svg += text(left - 8, top + cell * (r + 0.5) + 4, std::to_string(r + 1), "end");
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = std::clamp(values(r, c), 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255 * (1.0 - v)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      svg += "<rect x=\"" + num(left + cell * c) + "\" y=\"" + num(top + cell * r) + "\" width=\"" +
             num(cell) + "\" height=\"" + num(cell) + "\" fill=\"" + fill + "\" stroke=\"#ddd\"><title>" +
             tick(values(r, c)) + "</title></rect>\n";
    }
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    svg += text(left + cell * (c + 0.5), top + cell * values.rows() + 16, std::to_string(c + 1));
  }
  svg += text(left + cell * values.cols() / 2, h - 8, col_label);
  svg += "<text x=\"14\" y=\"" + num(top + cell * values.rows() / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " + num(top + cell * values.rows() / 2) +
         ")\">" + escape(row_label) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace motlab::plots
