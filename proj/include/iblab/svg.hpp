#ifndef IBLAB_SVG_HPP
#define IBLAB_SVG_HPP

#include <string>
#include <vector>

namespace iblab::cli {

struct PlotPoint {
  double x = 0.0;  // I(X;T) bits
  double y = 0.0;  // I(T;Y) bits
  int epoch = 0;
};

struct PlotSeries {
  int layer = 0;
  std::string label;
  std::vector<PlotPoint> points;  // epoch order
};

// Self-contained SVG (inline styles, no fonts fetched) of information-plane
// trajectories: one polyline per layer, markers shaded from blue (epoch 0)
// to red (last epoch) on a log(1+epoch) ramp. Byte-deterministic for equal
// input.
std::string render_info_plane_svg(const std::vector<PlotSeries>& series,
                                  const std::string& title);

}  // namespace iblab::cli

#endif  // IBLAB_SVG_HPP
