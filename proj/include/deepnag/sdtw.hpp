#pragma once

#include <span>
#include <utility>
#include <vector>

#include "deepnag/gesture.hpp"
#include "deepnag/parallel.hpp"

namespace deepnag {

// Cell cost used inside the alignment recursions.
//   ED:  squared Euclidean distance between sample points.
//   COS: 1 - cosine similarity between direction vectors; sequences are
//        the gesture's vector paths, so gestures need L >= 2 and the
//        gradient is mapped back to point space through the differencing.
// A zero-norm vector under COS yields the maximal cost 1 (defined value,
// zero gradient).
enum class CostKind { ED, COS };

double point_cost(CostKind kind, const Vector& a, const Vector& b);

// Soft minimum -gamma * log(sum_i exp(-v_i / gamma)), evaluated with the
// usual max-shift so it is stable for small gamma. +inf entries carry
// zero weight; if every entry is +inf the result is +inf. gamma must be
// positive.
double softmin(std::span<const double> values, double gamma);

// Classic (hard-min) dynamic time warping value with the same cell costs
// and boundary conditions as the soft kernel. Used by the 1-NN
// recognizer and as the gamma -> 0 reference.
double dtw_classic(const Gesture& x, const Gesture& y, CostKind kind);

// Everything the backward pass needs: the cell costs, the accumulated
// soft-cost matrix (with the +inf boundary row/column and corner 0), and
// the sequences the costs were computed from.
struct AlignmentTape {
  CostKind kind = CostKind::ED;
  double gamma = 0.0;
  double value = 0.0;
  Matrix cost;   // n x m cell costs
  Matrix acc;    // (n+1) x (m+1) accumulated soft costs
  Matrix a_seq;  // first sequence as used by the DP (points or vectors)
  Matrix b_seq;  // second sequence
  int a_points_len = 0;  // original L of the first gesture
};

// Gradient of the soft alignment value with respect to the FIRST input
// gesture only (N x L, matching x.points).
struct SdtwGradient {
  Matrix d_points;
};

struct SdtwResult {
  double value = 0.0;
  AlignmentTape tape;
};

// Soft alignment value plus tape. Throws DataError on dimension
// mismatches and NumericError if a non-finite value appears (bad gamma
// or wildly scaled data).
SdtwResult sdtw_forward(const Gesture& x, const Gesture& y, CostKind kind, double gamma);

// Exact gradient via the reverse-pass expected-alignment weights.
SdtwGradient sdtw_backward(const AlignmentTape& tape);

struct SdtwPairResult {
  double value = 0.0;
  Matrix d_points;  // gradient w.r.t. the pair's first gesture
};

using GesturePair = std::pair<const Gesture*, const Gesture*>;

// Values and first-argument gradients for a list of pairs. The serial
// and parallel paths produce bit-identical results: the parallel path
// distributes pairs across the pool and sweeps each DP matrix in
// anti-diagonal wavefront order (the per-cell arithmetic is unchanged).
// Per-pair failures are reported with the pair index. An empty list
// yields an empty result.
std::vector<SdtwPairResult> sdtw_batch(const std::vector<GesturePair>& pairs, CostKind kind,
                                       double gamma, bool parallel, ThreadPool* pool = nullptr);

namespace detail {

// Sequence-level forward shared by the gesture-level entry points and
// the loss module's cross-matrix evaluation. wavefront selects the
// anti-diagonal sweep; pool (optional) additionally splits long
// diagonals (n >= 32) across workers.
AlignmentTape sequence_forward(const Matrix& a, const Matrix& b, CostKind kind, double gamma,
                               bool wavefront, ThreadPool* pool = nullptr);

// Gradient w.r.t. the raw first sequence of the tape (vectors for COS).
Matrix sequence_backward(const AlignmentTape& tape);

// Maps a vector-path gradient back to point space (transpose of the
// differencing map). Identity for ED tapes.
Matrix grad_to_points(const AlignmentTape& tape, const Matrix& d_seq);

Vector cost_gradient(CostKind kind, const Vector& a, const Vector& b);

}  // namespace detail

}  // namespace deepnag
