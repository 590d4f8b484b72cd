#include "deepnag/gesture.hpp"

#include <cmath>
#include <vector>

namespace deepnag {

Matrix path_vectors(const Matrix& points) {
  const auto len = points.cols();
  if (len < 2) throw DataError("vector path requires at least two points");
  return points.rightCols(len - 1) - points.leftCols(len - 1);
}

VectorPath vector_path(const Gesture& g) { return VectorPath{path_vectors(g.points)}; }

double mean_segment_length(const Matrix& points) {
  Matrix vecs = path_vectors(points);
  double total = 0.0;
  for (Eigen::Index i = 0; i < vecs.cols(); ++i) total += vecs.col(i).norm();
  return total / static_cast<double>(vecs.cols());
}

double mean_segment_length(const Gesture& g) { return mean_segment_length(g.points); }

Matrix resample_points(const Matrix& raw, int target_len) {
  if (target_len < 2) throw UsageError("resample target length must be >= 2");
  const Eigen::Index m = raw.cols();
  if (m < 2) throw DataError("resample needs a polyline with at least two points");
  if (!all_finite(raw)) throw DataError("resample input contains non-finite values");

  std::vector<double> cum(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index i = 1; i < m; ++i) {
    cum[static_cast<std::size_t>(i)] =
        cum[static_cast<std::size_t>(i - 1)] + (raw.col(i) - raw.col(i - 1)).norm();
  }
  const double total = cum.back();
  if (!(total > 0.0)) throw DataError("resample input has zero arc length");

  Matrix out(raw.rows(), target_len);
  Eigen::Index seg = 0;
  for (int k = 0; k < target_len; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(target_len - 1);
    // Walk to the first segment whose far end reaches s; an exact vertex
    // hit stays in the earlier segment.
    while (seg < m - 2 && cum[static_cast<std::size_t>(seg) + 1] < s) ++seg;
    const double seg_len =
        cum[static_cast<std::size_t>(seg) + 1] - cum[static_cast<std::size_t>(seg)];
    const double t = seg_len > 0.0 ? (s - cum[static_cast<std::size_t>(seg)]) / seg_len : 0.0;
    out.col(k) = raw.col(seg) + t * (raw.col(seg + 1) - raw.col(seg));
  }
  // Pin the endpoints so accumulated rounding cannot move them.
  out.col(0) = raw.col(0);
  out.col(target_len - 1) = raw.col(m - 1);
  return out;
}

Gesture resample(const Gesture& g, int target_len) {
  Gesture out = g;
  out.points = resample_points(g.points, target_len);
  return out;
}

Matrix normalize_points(const Matrix& points) {
  if (points.size() == 0) throw DataError("normalize input is empty");
  if (!all_finite(points)) throw DataError("normalize input contains non-finite values");
  Matrix centered = points.colwise() - points.rowwise().mean().eval();
  const double extent = centered.cwiseAbs().maxCoeff();
  if (!(extent > 0.0)) throw DataError("normalize input has zero spatial extent");
  return centered / extent;
}

Gesture normalize(const Gesture& g) {
  Gesture out = g;
  out.points = normalize_points(g.points);
  return out;
}

}  // namespace deepnag
