#pragma once

#include <string>
#include <vector>

#include "deepnag/gesture.hpp"

namespace deepnag {

// Renders gestures as a grid of polylines (one cell per gesture, stroke
// color by class, start point marked). 2D+ gestures plot the first two
// features; 1D gestures plot value over time. Output text is fully
// deterministic.
std::string render_svg(const std::vector<Gesture>& gestures, int columns);
void export_svg(const std::vector<Gesture>& gestures, const std::string& path, int columns);

}  // namespace deepnag
