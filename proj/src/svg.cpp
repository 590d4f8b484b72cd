#include "deepnag/svg.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepnag {

namespace {

constexpr int kCell = 120;
constexpr int kPad = 10;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string class_color(int class_id) {
  // Golden-angle hue walk keeps adjacent class ids visually distinct.
  const int hue = (class_id * 137) % 360;
  return "hsl(" + std::to_string(hue) + ",70%,42%)";
}

}  // namespace

std::string render_svg(const std::vector<Gesture>& gestures, int columns) {
  if (gestures.empty()) throw DataError("export_svg: no gestures to render");
  if (columns < 1) throw UsageError("export_svg: columns must be >= 1");

  const int rows = (static_cast<int>(gestures.size()) + columns - 1) / columns;
  const int width = columns * kCell;
  const int height = rows * kCell;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  for (std::size_t idx = 0; idx < gestures.size(); ++idx) {
    const Gesture& g = gestures[idx];
    const int cx = (static_cast<int>(idx) % columns) * kCell;
    const int cy = (static_cast<int>(idx) / columns) * kCell;
    const int len = g.length();

    // Map the gesture's own bounding box into the padded cell, preserving
    // aspect ratio. 1D gestures plot value over time.
    Matrix xy(2, len);
    if (g.dims() >= 2) {
      xy.row(0) = g.points.row(0);
      xy.row(1) = g.points.row(1);
    } else {
      for (int t = 0; t < len; ++t) xy(0, t) = static_cast<double>(t);
      xy.row(1) = g.points.row(0);
    }
    const double min_x = xy.row(0).minCoeff(), max_x = xy.row(0).maxCoeff();
    const double min_y = xy.row(1).minCoeff(), max_y = xy.row(1).maxCoeff();
    const double span = std::max(std::max(max_x - min_x, max_y - min_y), 1e-12);
    const double scale = static_cast<double>(kCell - 2 * kPad) / span;
    const double off_x = cx + kPad + 0.5 * ((kCell - 2 * kPad) - scale * (max_x - min_x));
    const double off_y = cy + kPad + 0.5 * ((kCell - 2 * kPad) - scale * (max_y - min_y));

    out << "<polyline fill=\"none\" stroke=\"" << class_color(g.class_id)
        << "\" stroke-width=\"1.5\" points=\"";
    for (int t = 0; t < len; ++t) {
      const double px = off_x + scale * (xy(0, t) - min_x);
      // SVG y grows downward; flip so larger feature values plot higher.
      const double py = off_y + scale * (max_y - xy(1, t));
      if (t > 0) out << ' ';
      out << num(px) << ',' << num(py);
    }
    out << "\"><title>" << g.id << " (class " << g.class_id << ")</title></polyline>\n";
    // Mark the first sample so stroke direction is visible.
    const double sx = off_x + scale * (xy(0, 0) - min_x);
    const double sy = off_y + scale * (max_y - xy(1, 0));
    out << "<circle cx=\"" << num(sx) << "\" cy=\"" << num(sy) << "\" r=\"2.5\" fill=\""
        << class_color(g.class_id) << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void export_svg(const std::vector<Gesture>& gestures, const std::string& path, int columns) {
  const std::string text = render_svg(gestures, columns);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write svg file: " + path);
  out << text;
  if (!out) throw DataError("failed while writing svg file: " + path);
}

}  // namespace deepnag
