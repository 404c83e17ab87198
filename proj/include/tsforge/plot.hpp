#pragma once

#include "tsforge/synthkit.hpp"

#include <string>

namespace tsforge::corpus {

// Self-contained SVG line chart of a series: fixed 800x300 canvas, axes,
// one polyline through all points. Byte-identical output for identical
// input.
std::string render_plot(const synthkit::TimeSeries& ts);

// Plot-area geometry, exposed for tests.
inline constexpr int kPlotWidth = 800;
inline constexpr int kPlotHeight = 300;
inline constexpr int kPlotMarginLeft = 50;
inline constexpr int kPlotMarginRight = 20;
inline constexpr int kPlotMarginTop = 20;
inline constexpr int kPlotMarginBottom = 40;

}  // namespace tsforge::corpus
