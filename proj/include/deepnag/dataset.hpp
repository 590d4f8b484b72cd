#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deepnag/gesture.hpp"

namespace deepnag {

// A prepared collection of gestures. Invariants once prepare() ran:
// every gesture shares the same N and L, class ids are contiguous
// 0..class_count-1, and coordinates are normalized into [-1, 1].
struct Dataset {
  std::vector<Gesture> gestures;
  int class_count = 0;
  // class_id_map[new_id] = original id as found in the source file, kept
  // so remapped ids can be reported and traced back.
  std::vector<int> class_id_map;

  std::vector<int> subject_ids() const;  // unique, sorted
  std::vector<int> class_counts() const;
  int dims() const { return gestures.empty() ? 0 : gestures.front().dims(); }
  int length() const { return gestures.empty() ? 0 : gestures.front().length(); }
};

// Subject-level partition: every sample of a subject lands in exactly
// one of train/validation/test.
struct SplitSpec {
  std::vector<int> train_subjects;
  std::vector<int> validation_subjects;
  std::vector<int> test_subjects;
  std::array<double, 3> fractions{0.5, 0.2, 0.3};
  std::uint64_t seed = 0;

  bool in_train(int subject) const;
  bool in_validation(int subject) const;
  bool in_test(int subject) const;
};

// Shuffles the unique subject list with the seeded RNG and assigns
// subjects to partitions with largest-remainder rounding of
// fraction * subject_count (remainder ties resolve in partition order
// train, validation, test). Fractions must be positive and sum to 1;
// fewer than 3 subjects is an error.
SplitSpec split_subject_independent(const Dataset& d,
                                    const std::array<double, 3>& fractions,
                                    std::uint64_t seed);

std::vector<Gesture> gestures_for_subjects(const Dataset& d, const std::vector<int>& subjects);

// One rejected input gesture (e.g. single point, zero arc length).
struct PrepareIssue {
  std::string id;
  std::string reason;
};

struct PrepareReport {
  std::vector<PrepareIssue> rejected;
  std::vector<int> class_id_map;  // new id -> original id
};

// Resamples every raw polyline to `length` points, normalizes it, and
// remaps class ids to a contiguous range. Degenerate gestures are
// dropped and listed in the report; an empty usable remainder is a
// DataError.
Dataset prepare_dataset(const std::vector<Gesture>& raw, int length, PrepareReport* report);

// JSON-lines dataset files: one object per line with fields
//   {"id": str, "class": int, "subject": int, "points": [[f64 x N] x M]}
// where points are time-major (M rows of N coordinates). Loading remaps
// class ids to a contiguous range (mapping recorded in class_id_map);
// malformed lines raise DataError naming the line number. save/load
// round-trips bit-exactly.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);
void save_gestures(const std::vector<Gesture>& gestures, const std::string& path);
std::vector<Gesture> load_gesture_records(const std::string& path);

// CSV import: columns id,class,subject,t,x,y[,z] with an optional header
// row. Rows are grouped by id and ordered by t; returns raw polylines of
// varying length for prepare_dataset().
std::vector<Gesture> import_csv(const std::string& path);

}  // namespace deepnag
