#pragma once

#include <vector>

#include "deepnag/sdtw.hpp"

namespace deepnag {

// One per-class training quad: two generated half-batches and two
// disjoint real half-batches, all of the same gesture class and shape.
// Gradients are only ever produced for fake1; fake2 and the real halves
// act as constants.
struct BatchQuad {
  std::vector<Gesture> fake1;  // generated half-batch receiving gradients
  std::vector<Gesture> fake2;  // generated contrast half-batch
  std::vector<Gesture> real1;
  std::vector<Gesture> real2;
  int class_id = 0;
};

// Average Hausdorff distance between two point sets under a caller
// supplied dissimilarity, evaluated in the stated argument order so
// asymmetric d is allowed:
//   (1/|A|) sum_a min_b d(a, b) + (1/|B|) sum_b min_a d(b, a).
// Minimum ties resolve to the lowest index.
template <class T, class D>
double avg_hausdorff(const std::vector<T>& a, const std::vector<T>& b, D&& d) {
  if (a.empty() || b.empty()) throw DataError("avg_hausdorff needs two non-empty sets");
  double sum_a = 0.0;
  for (const T& x : a) {
    double best = d(x, b[0]);
    for (std::size_t j = 1; j < b.size(); ++j) {
      const double v = d(x, b[j]);
      if (v < best) best = v;
    }
    sum_a += best;
  }
  double sum_b = 0.0;
  for (const T& y : b) {
    double best = d(y, a[0]);
    for (std::size_t i = 1; i < a.size(); ++i) {
      const double v = d(y, a[i]);
      if (v < best) best = v;
    }
    sum_b += best;
  }
  return sum_a / static_cast<double>(a.size()) + sum_b / static_cast<double>(b.size());
}

// Loss pieces for one quad. `resample` is the raw (unweighted) mean of
// the per-sample equidistance penalty; `total()` applies alpha.
struct LossBreakdown {
  double ed_similarity = 0.0;
  double ed_variation = 0.0;
  double cos_similarity = 0.0;
  double cos_variation = 0.0;
  double resample = 0.0;
  double alpha = 0.0;

  double ed_total() const { return ed_similarity + ed_variation; }
  double cos_total() const { return cos_similarity + cos_variation; }
  double similarity() const { return ed_similarity + cos_similarity; }
  double variation() const { return ed_variation + cos_variation; }
  double total() const { return ed_total() + cos_total() + alpha * resample; }
};

// Penalty pushing a gesture toward equidistant points:
//   (1/(L-1)) * sum_i (|v_i| - mean_segment_length)^2.
double resample_loss(const Gesture& g);

// Gradient of resample_loss with respect to the gesture points (N x L).
Matrix resample_loss_gradient(const Gesture& g);

// Single-cost-kind quad objective:
//   AHD(fake1, real1) + | AHD(fake1, fake2) - AHD(real1, real2) |
// with AHD's inner dissimilarity the soft alignment value at `gamma`.
// The soft alignment value is symmetric for both cost kinds, so each
// unordered pair is evaluated once (fake1 member first wherever fake1
// participates).
double deepnag_term(const BatchQuad& quad, CostKind kind, double gamma, ThreadPool* pool = nullptr);

// Full quad loss: ED term + COS term + alpha * resample mean over fake1.
LossBreakdown deepnag_total(const BatchQuad& quad, double gamma, double alpha,
                            ThreadPool* pool = nullptr);

// Loss plus the gradient for each member of fake1 (and only fake1).
struct QuadGradient {
  LossBreakdown loss;
  std::vector<Matrix> d_fake1;  // one N x L gradient per fake1 member
};

QuadGradient deepnag_gradient(const BatchQuad& quad, double gamma, double alpha,
                              ThreadPool* pool = nullptr);

// KL divergence of a diagonal Gaussian from the standard normal:
//   sum_i 0.5 * (mu_i^2 + sigma_i^2 - 1 - log sigma_i^2).
double kl_diag_gaussian(const Vector& mu, const Vector& sigma);

// Soft-alignment reconstruction + KL, the sequence-VAE objective kept
// here for loss computation (no VAE training loop in this library).
struct VaeLoss {
  double reconstruction = 0.0;
  double kl = 0.0;
  double total() const { return reconstruction + kl; }
};

VaeLoss vae_loss(const Gesture& x, const Gesture& x_rec, const Vector& mu, const Vector& sigma,
                 CostKind kind, double gamma);

}  // namespace deepnag
