#include "tsforge/plot.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/textutil.hpp"

#include <algorithm>
#include <cmath>

namespace tsforge::corpus {

std::string render_plot(const synthkit::TimeSeries& ts) {
  const int n = static_cast<int>(ts.values.size());
  if (n < 2) throw ConfigError("render_plot: need at least 2 points");

  const double x0 = kPlotMarginLeft;
  const double x1 = kPlotWidth - kPlotMarginRight;
  const double y0 = kPlotHeight - kPlotMarginBottom;  // SVG y grows downward
  const double y1 = kPlotMarginTop;

  double vmin = *std::min_element(ts.values.begin(), ts.values.end());
  double vmax = *std::max_element(ts.values.begin(), ts.values.end());
  if (vmax - vmin < 1e-12) {  // flat series: center it
    vmin -= 1.0;
    vmax += 1.0;
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kPlotWidth) + "\" height=\"" +
         std::to_string(kPlotHeight) + "\" viewBox=\"0 0 " +
         std::to_string(kPlotWidth) + " " + std::to_string(kPlotHeight) +
         "\">\n";
  svg += "<rect width=\"" + std::to_string(kPlotWidth) + "\" height=\"" +
         std::to_string(kPlotHeight) + "\" fill=\"white\"/>\n";
  // axes
  svg += "<line x1=\"" + format_fixed(x0, 2) + "\" y1=\"" +
         format_fixed(y0, 2) + "\" x2=\"" + format_fixed(x1, 2) +
         "\" y2=\"" + format_fixed(y0, 2) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + format_fixed(x0, 2) + "\" y1=\"" +
         format_fixed(y0, 2) + "\" x2=\"" + format_fixed(x0, 2) +
         "\" y2=\"" + format_fixed(y1, 2) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // axis labels: value range and index range
  svg += "<text x=\"" + format_fixed(x0, 2) + "\" y=\"" +
         format_fixed(y0 + 16.0, 2) + "\" font-size=\"10\">0</text>\n";
  svg += "<text x=\"" + format_fixed(x1 - 20.0, 2) + "\" y=\"" +
         format_fixed(y0 + 16.0, 2) + "\" font-size=\"10\">" +
         std::to_string(n - 1) + "</text>\n";
  svg += "<text x=\"2\" y=\"" + format_fixed(y0, 2) +
         "\" font-size=\"10\">" + format_fixed(vmin, 2) + "</text>\n";
  svg += "<text x=\"2\" y=\"" + format_fixed(y1 + 8.0, 2) +
         "\" font-size=\"10\">" + format_fixed(vmax, 2) + "</text>\n";

  svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" "
         "points=\"";
  for (int i = 0; i < n; ++i) {
    const double fx = x0 + (x1 - x0) * i / (n - 1);
    const double fy =
        y0 + (y1 - y0) * (ts.values[i] - vmin) / (vmax - vmin);
    if (i) svg += " ";
    svg += format_fixed(fx, 2) + "," + format_fixed(fy, 2);
  }
  svg += "\"/>\n</svg>\n";
  return svg;
}

}  // namespace tsforge::corpus
