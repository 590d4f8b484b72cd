#pragma once

// Independent reference implementations the tests check the library
// against. Everything here is deliberately written the slow, obvious
// way (plain loops, exhaustive enumeration, long double accumulation)
// and shares no code with the library kernels.

#include <functional>
#include <vector>

#include "deepnag/gesture.hpp"
#include "deepnag/generator.hpp"
#include "deepnag/sdtw.hpp"

namespace oracle {

using deepnag::Matrix;
using deepnag::Vector;

// Per-cell costs recomputed from scratch: squared Euclidean between
// point columns, or 1 - cosine between direction vectors derived here.
double ed_cost(const Matrix& a, int i, const Matrix& b, int j);
double cos_cost(const Matrix& a, int i, const Matrix& b, int j);

// n x m cost matrix between two gestures' point matrices under the
// given kind (COS differencing included, so n = La-1, m = Lb-1).
Matrix gesture_costs(const Matrix& pa, const Matrix& pb, deepnag::CostKind kind);

// Accumulated costs of every monotone alignment path through an n x m
// cost matrix (moves: right, down, diagonal; both endpoints included).
std::vector<double> all_path_costs(const Matrix& costs);

// Hard and soft aggregation over the enumerated paths:
//   min(paths)   and   -gamma * log sum exp(-path/gamma).
double path_min(const Matrix& costs);
double path_softmin(const Matrix& costs, double gamma);

// Independent O(n*m) hard-min DTW over two gestures (own costs, own
// DP); usable where enumeration is too slow.
double hard_dtw(const Matrix& pa, const Matrix& pb, deepnag::CostKind kind);

// Serial exhaustive-scan 1-NN on hard_dtw; ties to the lowest index.
int knn1_scan(const std::vector<deepnag::Gesture>& templates, const deepnag::Gesture& query,
              deepnag::CostKind kind);

// Central finite difference of eval() with respect to *slot.
double central_diff(double* slot, double h, const std::function<double()>& eval);

// Max elementwise |analytic - fd| normalized by the largest magnitude
// seen in either gradient (normwise relative error; robust where single
// components pass through zero).
struct GradCheck {
  double max_abs_diff = 0.0;
  double scale = 0.0;  // largest |entry| over both gradients
  double relative() const { return max_abs_diff / (scale > 1e-12 ? scale : 1.0); }
  void account(double analytic, double fd);
};

// Scalar (plain double loops) evaluation of one recurrent cell using
// the documented gate equations; duplicate of gru_cell_forward.
std::vector<double> gru_cell_scalar(const deepnag::GruLayerParams& p, const std::vector<double>& x,
                                    const std::vector<double>& h_prev);

// Arc-length resampling recomputed independently: long double
// cumulative lengths, per-target linear scan from the start, boundary
// ties to the earlier segment.
Matrix resample_scan(const Matrix& raw, int length);

}  // namespace oracle
