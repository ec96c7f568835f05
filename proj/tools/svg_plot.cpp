#include "svg_plot.hpp"

#include <cstdio>
#include <ostream>

namespace qkd {

namespace {

// Plot rectangle inside the 800x560 canvas.
constexpr double kLeft = 70.0;
constexpr double kTop = 20.0;
constexpr double kRight = 780.0;
constexpr double kBottom = 500.0;
constexpr int kTicks = 10;  // divisions per axis

std::string num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

void write_curve_svg(std::ostream& os, const std::vector<SvgSeries>& series, const SvgAxes& axes) {
  const auto x_of = [&](double e) {
    return kLeft + (e - axes.e_min) / (axes.e_max - axes.e_min) * (kRight - kLeft);
  };
  const auto y_of = [&](double tau) {
    return kBottom - (tau - axes.tau_min) / (axes.tau_max - axes.tau_min) * (kBottom - kTop);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"560\" "
        "viewBox=\"0 0 800 560\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"560\" fill=\"white\"/>\n";

  // Gridlines and tick labels.
  for (int k = 0; k <= kTicks; ++k) {
    const double ex = axes.e_min + (axes.e_max - axes.e_min) * k / kTicks;
    const double x = x_of(ex);
    os << "  <line x1=\"" << num("%.2f", x) << "\" y1=\"" << num("%.2f", kTop) << "\" x2=\""
       << num("%.2f", x) << "\" y2=\"" << num("%.2f", kBottom)
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << num("%.2f", x) << "\" y=\"" << num("%.2f", kBottom + 20.0)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\" "
          "text-anchor=\"middle\">"
       << num("%.3g", ex) << "</text>\n";

    const double ty = axes.tau_min + (axes.tau_max - axes.tau_min) * k / kTicks;
    const double y = y_of(ty);
    os << "  <line x1=\"" << num("%.2f", kLeft) << "\" y1=\"" << num("%.2f", y) << "\" x2=\""
       << num("%.2f", kRight) << "\" y2=\"" << num("%.2f", y)
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << num("%.2f", kLeft - 8.0) << "\" y=\"" << num("%.2f", y + 4.0)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\" "
          "text-anchor=\"end\">"
       << num("%.3g", ty) << "</text>\n";
  }

  // Axis frame.
  os << "  <line x1=\"" << num("%.2f", kLeft) << "\" y1=\"" << num("%.2f", kTop) << "\" x2=\""
     << num("%.2f", kLeft) << "\" y2=\"" << num("%.2f", kBottom)
     << "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
  os << "  <line x1=\"" << num("%.2f", kLeft) << "\" y1=\"" << num("%.2f", kBottom) << "\" x2=\""
     << num("%.2f", kRight) << "\" y2=\"" << num("%.2f", kBottom)
     << "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";

  // Axis labels.
  os << "  <text x=\"" << num("%.2f", 0.5 * (kLeft + kRight)) << "\" y=\"545\" "
        "font-family=\"sans-serif\" font-size=\"14\" fill=\"#111111\" text-anchor=\"middle\">"
     << axes.x_label << "</text>\n";
  os << "  <text x=\"22\" y=\"" << num("%.2f", 0.5 * (kTop + kBottom))
     << "\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#111111\" "
        "text-anchor=\"middle\" transform=\"rotate(-90 22 "
     << num("%.2f", 0.5 * (kTop + kBottom)) << ")\">" << axes.y_label << "</text>\n";

  // Series polylines.
  for (const SvgSeries& s : series) {
    os << "  <polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << " points=\"";
    bool first = true;
    for (const CurvePoint& p : s.points) {
      if (!first) os << " ";
      os << num("%.2f", x_of(p.e)) << "," << num("%.2f", y_of(p.tau));
      first = false;
    }
    os << "\"/>\n";
  }

  // Legend, top-left inside the plot.
  double ly = kTop + 24.0;
  for (const SvgSeries& s : series) {
    os << "  <line x1=\"" << num("%.2f", kLeft + 16.0) << "\" y1=\"" << num("%.2f", ly - 4.0)
       << "\" x2=\"" << num("%.2f", kLeft + 52.0) << "\" y2=\"" << num("%.2f", ly - 4.0)
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << "/>\n";
    os << "  <text x=\"" << num("%.2f", kLeft + 60.0) << "\" y=\"" << num("%.2f", ly)
       << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#111111\">" << s.label
       << "</text>\n";
    ly += 22.0;
  }

  os << "</svg>\n";
}

}  // namespace qkd
