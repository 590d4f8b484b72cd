#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepnag/dataset.hpp"
#include "deepnag/sdtw.hpp"
#include "deepnag/trainer.hpp"

namespace deepnag {

// Nearest-neighbour classification under classic DTW; distance ties
// resolve to the lowest template index. Template distances can be
// evaluated across the pool.
int knn1_dtw_classify(const std::vector<Gesture>& templates, const Gesture& query, CostKind kind,
                      ThreadPool* pool = nullptr);

// Jittered copies of real samples: per-class synthetic count, each
// synthetic sample is a uniformly drawn real sample of that class plus
// i.i.d. Gaussian noise with per-feature sigma = magnitude_fraction *
// (feature extent over the whole training set). magnitude 0 gives exact
// copies.
std::vector<Gesture> noise_augment(const std::vector<Gesture>& train, double magnitude_fraction,
                                   int per_class_count, Rng& rng);

struct ExperimentResult {
  std::string dataset;
  std::string recognizer;
  std::string augmenter;
  std::uint64_t seed = 0;  // split seed
  double error = 0.0;      // test error rate in [0, 1]
  int n_train_real = 0;
  int n_train_synth = 0;
};

struct EvalOptions {
  std::string dataset_name = "dataset";
  std::array<double, 3> fractions{0.5, 0.2, 0.3};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> augmenters{"baseline", "noise", "deepnag"};
  double noise_magnitude = 0.02;
  double synth_ratio = 1.0;  // synthetic per class = ratio * real per class
  int workers = 0;
};

// For every split seed and augmenter: build the augmented training set,
// pick the recognizer cost kind on the validation split (lower error
// wins, ED on a tie), and report the test error. The "deepnag"
// augmenter samples the generator checkpoint and requires `model`.
std::vector<ExperimentResult> run_experiment(const Dataset& d, const EvalOptions& opt,
                                             const Checkpoint* model);

struct ScoreRow {
  std::string augmenter;
  int score = 0;  // wins + counted ties
  int wins = 0;   // unique strict minima
  int ties = 0;   // shared minima that still beat baseline and noise
};

struct ScoreTable {
  std::vector<ScoreRow> rows;
  int groups = 0;
};

// Scores generator augmenters across experiment groups (one group per
// dataset/recognizer/seed). A generator earns +1 in a group iff its
// error is the minimum among generators AND strictly below both the
// baseline and the noise rows; on a shared minimum every sharing
// generator that also beats baseline and noise earns the point. Groups
// missing a baseline or noise row are an error.
ScoreTable score_generators(const std::vector<ExperimentResult>& results);

void write_results_csv(const std::vector<ExperimentResult>& results, const std::string& path);
std::string format_results_table(const std::vector<ExperimentResult>& results);
std::string format_score_table(const ScoreTable& table);

}  // namespace deepnag
