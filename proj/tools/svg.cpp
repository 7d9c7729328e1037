#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace heatcast::cli::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render(const Chart& chart) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  bool has_bars = false;
  for (const auto& s : chart.series) {
    has_bars = has_bars || s.style == Style::Bars;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (has_bars) {
    ymin = std::min(ymin, 0.0);
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymax += pad;
  if (!has_bars) ymin -= pad;

  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(chart.title) << "</text>\n";
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
      << num(plot_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
        << "</text>\n";
  }
  if (chart.categories.empty()) {
    for (int t = 0; t <= 4; ++t) {
      const double xv = xmin + (xmax - xmin) * t / 4.0;
      out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + plot_h + 16)
          << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    }
  } else {
    for (std::size_t i = 0; i < chart.categories.size(); ++i) {
      out << "<text x=\"" << num(px(static_cast<double>(i))) << "\" y=\"" << num(kTop + plot_h + 16)
          << "\" text-anchor=\"middle\" font-size=\"9\">" << escape(chart.categories[i]) << "</text>\n";
    }
  }
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << num(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(chart.y_label) << "</text>\n";

  double legend_y = kTop + 14;
  for (const auto& s : chart.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    switch (s.style) {
      case Style::Points:
        for (std::size_t i = 0; i < n; ++i) {
          if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
          out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2\" fill=\""
              << s.color << "\"/>\n";
        }
        break;
      case Style::Line: {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
          if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
          out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        }
        out << "\"/>\n";
        break;
      }
      case Style::Bars: {
        const double bar_w = 0.7 * plot_w / std::max<double>(1.0, xmax - xmin);
        for (std::size_t i = 0; i < n; ++i) {
          const double top = py(std::max(s.y[i], 0.0)), base = py(std::min(s.y[i], 0.0));
          out << "<rect x=\"" << num(px(s.x[i]) - bar_w / 2) << "\" y=\"" << num(top) << "\" width=\"" << num(bar_w)
              << "\" height=\"" << num(base - top) << "\" fill=\"" << s.color << "\"/>\n";
        }
        break;
      }
    }
    if (!s.label.empty()) {
      out << "<text x=\"" << num(kLeft + plot_w - 8) << "\" y=\"" << num(legend_y) << "\" text-anchor=\"end\" fill=\""
          << s.color << "\">" << escape(s.label) << "</text>\n";
      legend_y += 14;
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace heatcast::cli::svg
