#pragma once

#include <string>

#include "deepnag/common.hpp"

namespace deepnag {

// One gesture sample: N feature rows by L time-step columns, so column t
// is the device sample at step t. After prepare() every gesture in a
// dataset shares the same L and every coordinate lies in [-1, 1].
struct Gesture {
  Matrix points;  // N x L
  int class_id = 0;
  int subject_id = 0;
  std::string id;

  int dims() const { return static_cast<int>(points.rows()); }
  int length() const { return static_cast<int>(points.cols()); }
};

// Per-step displacement vectors of a gesture: column i holds
// points[:, i+1] - points[:, i], i.e. N x (L-1).
struct VectorPath {
  Matrix vectors;
};

// Displacements between consecutive columns (N x (L-1)). Requires L >= 2.
Matrix path_vectors(const Matrix& points);
VectorPath vector_path(const Gesture& g);

// Mean Euclidean segment length over the vector path.
double mean_segment_length(const Matrix& points);
double mean_segment_length(const Gesture& g);

// Arc-length resampling in the style of the classic unistroke
// recognizers: the output has target_len points spaced uniformly along
// the input polyline, with the endpoints preserved exactly. Zero-length
// segments are skipped; an exact hit on a vertex is taken from the
// earlier segment. Throws DataError for degenerate inputs (fewer than
// two points, zero total arc length, non-finite values) and UsageError
// for target_len < 2.
Matrix resample_points(const Matrix& raw, int target_len);
Gesture resample(const Gesture& g, int target_len);

// Translates the centroid to the origin, then scales uniformly so the
// largest coordinate magnitude is exactly 1 (every coordinate ends in
// [-1, 1], aspect ratio preserved). Throws DataError on zero spatial
// extent or non-finite input.
Matrix normalize_points(const Matrix& points);
Gesture normalize(const Gesture& g);

}  // namespace deepnag
