#include "unrank/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace unrank {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 190.0;  // room for the legend
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;
constexpr int kTicks = 5;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                    "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22",
                                    "#17becf"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string TickLabel(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string LineChartSvg(const std::vector<ChartSeries>& series,
                         const ChartOptions& options) {
  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xr.Add(s.x[i]);
      yr.Add(s.y[i]);
    }
  }
  if (!options.x_categories.empty()) {
    xr.Add(0.0);
    xr.Add(static_cast<double>(options.x_categories.size() - 1));
  }
  xr.Finish();
  yr.Finish();

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double x) {
    return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto py = [&](double y) {
    return kTop + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"500\" viewBox=\"0 0 800 500\" font-family=\"sans-serif\" "
         "font-size=\"12\">\n";
  svg << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  svg << "<text x=\"" << Num(kLeft + plot_w / 2) << "\" y=\"28\" "
      << "text-anchor=\"middle\" font-size=\"16\">" << Escape(options.title)
      << "</text>\n";

  // Axes.
  svg << "<line x1=\"" << Num(kLeft) << "\" y1=\"" << Num(kTop + plot_h)
      << "\" x2=\"" << Num(kLeft + plot_w) << "\" y2=\"" << Num(kTop + plot_h)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << Num(kLeft) << "\" y1=\"" << Num(kTop) << "\" x2=\""
      << Num(kLeft) << "\" y2=\"" << Num(kTop + plot_h)
      << "\" stroke=\"black\"/>\n";

  // Y ticks.
  for (int t = 0; t <= kTicks; ++t) {
    const double v = yr.lo + (yr.hi - yr.lo) * t / kTicks;
    const double y = py(v);
    svg << "<line x1=\"" << Num(kLeft - 5) << "\" y1=\"" << Num(y)
        << "\" x2=\"" << Num(kLeft) << "\" y2=\"" << Num(y)
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << Num(kLeft) << "\" y1=\"" << Num(y) << "\" x2=\""
        << Num(kLeft + plot_w) << "\" y2=\"" << Num(y)
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << Num(kLeft - 8) << "\" y=\"" << Num(y + 4)
        << "\" text-anchor=\"end\">" << TickLabel(v) << "</text>\n";
  }
  // X ticks.
  if (!options.x_categories.empty()) {
    for (std::size_t i = 0; i < options.x_categories.size(); ++i) {
      const double x = px(static_cast<double>(i));
      svg << "<line x1=\"" << Num(x) << "\" y1=\"" << Num(kTop + plot_h)
          << "\" x2=\"" << Num(x) << "\" y2=\"" << Num(kTop + plot_h + 5)
          << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << Num(x) << "\" y=\"" << Num(kTop + plot_h + 20)
          << "\" text-anchor=\"middle\">" << Escape(options.x_categories[i])
          << "</text>\n";
    }
  } else {
    for (int t = 0; t <= kTicks; ++t) {
      const double v = xr.lo + (xr.hi - xr.lo) * t / kTicks;
      const double x = px(v);
      svg << "<line x1=\"" << Num(x) << "\" y1=\"" << Num(kTop + plot_h)
          << "\" x2=\"" << Num(x) << "\" y2=\"" << Num(kTop + plot_h + 5)
          << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << Num(x) << "\" y=\"" << Num(kTop + plot_h + 20)
          << "\" text-anchor=\"middle\">" << TickLabel(v) << "</text>\n";
    }
  }
  svg << "<text x=\"" << Num(kLeft + plot_w / 2) << "\" y=\""
      << Num(kHeight - 15) << "\" text-anchor=\"middle\">"
      << Escape(options.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << Num(kTop + plot_h / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << Num(kTop + plot_h / 2) << ")\">" << Escape(options.y_label)
      << "</text>\n";

  // Series and legend.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::ostringstream points;
    bool any = false;
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size();
         ++i) {
      const double x = series[s].x[i], y = series[s].y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      points << (any ? " " : "") << Num(px(x)) << "," << Num(py(y));
      svg << "<circle cx=\"" << Num(px(x)) << "\" cy=\"" << Num(py(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      any = true;
    }
    if (any) {
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"" << points.str() << "\"/>\n";
    }
    const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
    const double lx = kLeft + plot_w + 20;
    svg << "<line x1=\"" << Num(lx) << "\" y1=\"" << Num(ly) << "\" x2=\""
        << Num(lx + 20) << "\" y2=\"" << Num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << Num(lx + 26) << "\" y=\"" << Num(ly + 4) << "\">"
        << Escape(series[s].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace unrank
