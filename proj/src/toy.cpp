#include "deepnag/toy.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "deepnag/gesture.hpp"

namespace deepnag {

namespace {

constexpr int kRawPoints = 48;
constexpr double kPi = 3.14159265358979323846;

// One raw (un-resampled, un-normalized) sample of the given shape class with
// small coordinate jitter so samples within a class are distinct.
Matrix toy_shape(int class_id, Rng& rng) {
  std::normal_distribution<double> jitter(0.0, 0.02);
  Matrix pts(2, kRawPoints);
  for (int k = 0; k < kRawPoints; ++k) {
    const double u = static_cast<double>(k) / (kRawPoints - 1);  // 0..1
    double x = 0.0, y = 0.0;
    switch (class_id) {
      case 0:  // diagonal line
        x = u;
        y = u;
        break;
      case 1:  // circle, one full turn starting at angle 0
        x = 0.5 * std::cos(2.0 * kPi * u);
        y = 0.5 * std::sin(2.0 * kPi * u);
        break;
      default:  // zigzag: advance in x, bounce in y (4 teeth)
        x = u;
        y = 0.25 * (2.0 * std::abs(2.0 * (u * 4.0 - std::floor(u * 4.0 + 0.5))) - 1.0);
        break;
    }
    pts(0, k) = x + jitter(rng);
    pts(1, k) = y + jitter(rng);
  }
  return pts;
}

}  // namespace

Dataset make_toy_dataset(int per_class, int subjects, int length, std::uint64_t seed) {
  if (per_class < 1) throw UsageError("make_toy_dataset: per_class must be >= 1");
  if (subjects < 1) throw UsageError("make_toy_dataset: subjects must be >= 1");

  Rng rng(seed);
  std::vector<Gesture> raw;
  raw.reserve(3 * static_cast<std::size_t>(per_class));
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < per_class; ++k) {
      Gesture g;
      g.points = toy_shape(c, rng);
      g.class_id = c;
      g.subject_id = k % subjects;
      g.id = "toy-c" + std::to_string(c) + "-" + std::to_string(k);
      raw.push_back(std::move(g));
    }
  }
  return prepare_dataset(raw, length, nullptr);
}

}  // namespace deepnag
