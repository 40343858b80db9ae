#include "iblab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "iblab/common.hpp"

namespace iblab::cli {

namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 600;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 60;

const char* kLayerPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                               "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Blue -> red ramp on log(1+epoch), rounded per channel.
std::string epoch_color(int epoch, int max_epoch) {
  const double t =
      max_epoch > 0 ? std::log1p(static_cast<double>(epoch)) /
                          std::log1p(static_cast<double>(max_epoch))
                    : 0.0;
  const int r = static_cast<int>(std::lround(33 + t * (178 - 33)));
  const int g = static_cast<int>(std::lround(102 + t * (24 - 102)));
  const int b = static_cast<int>(std::lround(172 + t * (43 - 172)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

double nice_step(double span) {
  if (span <= 0.0) return 1.0;
  const double raw = span / 8.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (const double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= mult * mag) return mult * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_info_plane_svg(const std::vector<PlotSeries>& series,
                                  const std::string& title) {
  if (series.empty()) {
    throw InputDomainError("nothing to plot: no series");
  }
  double max_x = 0.0, max_y = 0.0;
  int max_epoch = 0;
  std::size_t total_points = 0;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
      max_epoch = std::max(max_epoch, p.epoch);
      ++total_points;
    }
  }
  if (total_points == 0) {
    throw InputDomainError("nothing to plot: series contain no points");
  }
  max_x = max_x > 0.0 ? max_x * 1.05 : 1.0;
  max_y = max_y > 0.0 ? max_y * 1.05 : 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + x / max_x * plot_w; };
  auto sy = [&](double y) { return kHeight - kMarginBottom - y / max_y * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // Axes with ticks.
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom
      << "\" x2=\"" << kWidth - kMarginRight << "\" y2=\""
      << kHeight - kMarginBottom << "\" stroke=\"#000000\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"#000000\"/>\n";
  const double x_step = nice_step(max_x);
  for (double x = 0.0; x <= max_x + 1e-12; x += x_step) {
    out << "<line x1=\"" << fmt(sx(x)) << "\" y1=\""
        << kHeight - kMarginBottom << "\" x2=\"" << fmt(sx(x)) << "\" y2=\""
        << kHeight - kMarginBottom + 5 << "\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << fmt(sx(x)) << "\" y=\""
        << kHeight - kMarginBottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(x) << "</text>\n";
  }
  const double y_step = nice_step(max_y);
  for (double y = 0.0; y <= max_y + 1e-12; y += y_step) {
    out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << fmt(sy(y))
        << "\" x2=\"" << kMarginLeft << "\" y2=\"" << fmt(sy(y))
        << "\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << kMarginLeft - 9 << "\" y=\"" << fmt(sy(y) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(y) << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">I(X;T) bits</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">I(T;Y) bits</text>\n";

  for (const auto& s : series) {
    const char* color =
        kLayerPalette[static_cast<std::size_t>(s.layer) %
                      (sizeof(kLayerPalette) / sizeof(kLayerPalette[0]))];
    if (s.points.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : s.points) {
        out << fmt(sx(p.x)) << ',' << fmt(sy(p.y)) << ' ';
      }
      out << "\"/>\n";
    }
    for (const auto& p : s.points) {
      out << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.y))
          << "\" r=\"3\" fill=\"" << epoch_color(p.epoch, max_epoch)
          << "\" stroke=\"" << color << "\" stroke-width=\"0.8\"/>\n";
    }
  }

  // Legend: layer -> label.
  double ly = kMarginTop + 8;
  for (const auto& s : series) {
    const char* color =
        kLayerPalette[static_cast<std::size_t>(s.layer) %
                      (sizeof(kLayerPalette) / sizeof(kLayerPalette[0]))];
    out << "<rect x=\"" << kMarginLeft + 10 << "\" y=\"" << fmt(ly - 8)
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << kMarginLeft + 27 << "\" y=\"" << fmt(ly + 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
    ly += 17;
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace iblab::cli
