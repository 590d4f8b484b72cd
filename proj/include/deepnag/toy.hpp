#pragma once

#include "deepnag/dataset.hpp"

namespace deepnag {

// Builds a small synthetic 2D gesture dataset with three shape classes
// (line, circle, zigzag), per-sample jitter, and round-robin subject ids.
// The result is already resampled to `length` points and normalized, so it
// can feed straight into training or evaluation.
Dataset make_toy_dataset(int per_class, int subjects, int length, std::uint64_t seed);

}  // namespace deepnag
