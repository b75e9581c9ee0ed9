#include <cstdio>
#include <stdexcept>
#include <string>

#include "motion/metrics.hpp"

namespace motion {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

}  // namespace

std::string pck_curves_svg(const MetricReport& report) {
  if (report.curves.empty()) {
    throw std::invalid_argument("svg: report has no coverage curves");
  }
  const double x_min = report.curves.front().thresholds.front();
  const double x_max = report.curves.front().thresholds.back();
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto sx = [&](double v) { return kLeft + (v - x_min) / (x_max - x_min) * plot_w; };
  const auto sy = [&](double v) { return kTop + (1.0 - v) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
         num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"15\">"
         "joint coverage vs threshold</text>\n";

  // Axes with five ticks each.
  svg += "<g stroke=\"#444\" stroke-width=\"1\" font-family=\"monospace\" font-size=\"11\">\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
         num(kLeft + plot_w) + "\" y2=\"" + num(kTop + plot_h) + "\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = i / 4.0;
    svg += "<line x1=\"" + num(sx(fx)) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
           num(sx(fx)) + "\" y2=\"" + num(kTop + plot_h + 5) + "\"/>\n";
    svg += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#222\">" + num(fx) +
           "</text>\n";
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(sy(fy)) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(sy(fy)) + "\"/>\n";
    svg += "<text x=\"" + num(kLeft - 9) + "\" y=\"" + num(sy(fy) + 4) +
           "\" text-anchor=\"end\" stroke=\"none\" fill=\"#222\">" + num(fy) + "</text>\n";
  }
  svg += "</g>\n";
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">"
         "threshold (bone units)</text>\n";

  for (std::size_t c = 0; c < report.curves.size(); ++c) {
    const auto& curve = report.curves[c];
    const char* color = kPalette[c % (sizeof kPalette / sizeof kPalette[0])];
    std::string points;
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
      if (i) points += " ";
      points += num(sx(curve.thresholds[i])) + "," + num(sy(curve.values[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    // Legend entry.
    const double ly = kTop + 14.0 + 16.0 * static_cast<double>(c);
    svg += "<line x1=\"" + num(kLeft + 10) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(kLeft + 34) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + num(kLeft + 40) + "\" y=\"" + num(ly) +
           "\" font-family=\"monospace\" font-size=\"11\" fill=\"#222\">" +
           num(curve.horizon_ms) + " ms</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace motion
