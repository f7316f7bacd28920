#ifndef UNRANK_SVG_H_
#define UNRANK_SVG_H_

#include <string>
#include <vector>

namespace unrank {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  // Replaces numeric x tick labels when non-empty; ticks then sit at the
  // integer positions 0..n-1.
  std::vector<std::string> x_categories;
};

// Standalone 800x500 SVG line chart: axes with tick labels, one polyline per
// series with point markers, and a legend. Non-finite points are skipped.
std::string LineChartSvg(const std::vector<ChartSeries>& series,
                         const ChartOptions& options);

}  // namespace unrank

#endif  // UNRANK_SVG_H_
