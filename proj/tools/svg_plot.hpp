#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qkdlab/bounds.hpp"

namespace qkd {

// One polyline on the shared axes.
struct SvgSeries {
  std::string label;
  std::string color;  // SVG color string
  bool dashed = false;
  std::vector<CurvePoint> points;
};

struct SvgAxes {
  double e_min = 0.0, e_max = 0.5;
  double tau_min = 0.0, tau_max = 1.0;
  std::string x_label = "QBER e";
  std::string y_label = "discarded fraction tau";
};

// Fixed 800x560 self-contained plot: background, gridlines, axes with tick
// labels, one polyline per series, legend. All styling is inline and every
// coordinate is written with two decimals, so reruns are byte-identical.
void write_curve_svg(std::ostream& os, const std::vector<SvgSeries>& series, const SvgAxes& axes);

}  // namespace qkd
