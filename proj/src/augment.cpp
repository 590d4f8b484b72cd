#include "deepnag/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace deepnag {

namespace {

// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

int knn1_dtw_classify(const std::vector<Gesture>& templates, const Gesture& query, CostKind kind,
                      ThreadPool* pool) {
  if (templates.empty()) throw DataError("knn1_dtw_classify: empty template set");
  std::vector<double> dist(templates.size());
  const auto eval = [&](std::size_t i) { dist[i] = dtw_classic(templates[i], query, kind); };
  if (pool && pool->size() > 1 && templates.size() > 1) {
    pool->parallel_for(templates.size(), eval);
  } else {
    for (std::size_t i = 0; i < templates.size(); ++i) eval(i);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] < dist[best]) best = i;  // ties keep the lowest index
  }
  return templates[best].class_id;
}

namespace {

// Per-feature bounding-box extents over a gesture set.
Vector feature_extent(const std::vector<Gesture>& set) {
  const int dims = set.front().dims();
  Vector lo = Vector::Constant(dims, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(dims, -std::numeric_limits<double>::infinity());
  for (const auto& g : set) {
    lo = lo.cwiseMin(g.points.rowwise().minCoeff());
    hi = hi.cwiseMax(g.points.rowwise().maxCoeff());
  }
  return hi - lo;
}

// `count` jittered copies drawn uniformly from `sources`.
std::vector<Gesture> noisy_copies(const std::vector<Gesture>& sources,
                                  const std::vector<std::size_t>& indices, const Vector& sigma,
                                  int count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Gesture> synth;
  synth.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
    const Gesture& src = sources[indices[pick(rng)]];
    Gesture g = src;
    g.id = src.id + "-n" + std::to_string(k);
    g.subject_id = -1;
    for (Eigen::Index t = 0; t < g.points.cols(); ++t) {
      for (Eigen::Index n = 0; n < g.points.rows(); ++n) {
        g.points(n, t) += sigma(n) * normal(rng);
      }
    }
    synth.push_back(std::move(g));
  }
  return synth;
}

std::map<int, std::vector<std::size_t>> indices_by_class(const std::vector<Gesture>& set) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < set.size(); ++i) by_class[set[i].class_id].push_back(i);
  return by_class;
}

}  // namespace

std::vector<Gesture> noise_augment(const std::vector<Gesture>& train, double magnitude_fraction,
                                   int per_class_count, Rng& rng) {
  if (train.empty()) throw DataError("noise_augment: empty training set");
  if (magnitude_fraction < 0.0) throw UsageError("noise_augment: magnitude must be >= 0");
  if (per_class_count < 0) throw UsageError("noise_augment: count must be >= 0");

  const Vector sigma = magnitude_fraction * feature_extent(train);
  std::vector<Gesture> synth;
  for (const auto& [class_id, indices] : indices_by_class(train)) {
    auto part = noisy_copies(train, indices, sigma, per_class_count, rng);
    synth.insert(synth.end(), part.begin(), part.end());
  }
  return synth;
}

namespace {

constexpr std::uint64_t kNoiseSalt = 0x4e6f;
constexpr std::uint64_t kGenSalt = 0x47656e;

double error_rate(const std::vector<Gesture>& templates, const std::vector<Gesture>& queries,
                  CostKind kind, ThreadPool* pool) {
  if (queries.empty()) throw DataError("evaluation split is empty");
  std::vector<int> predicted(queries.size());
  // Parallelize over queries; each query scans templates serially.
  const auto eval = [&](std::size_t q) {
    predicted[q] = knn1_dtw_classify(templates, queries[q], kind, nullptr);
  };
  if (pool && pool->size() > 1) {
    pool->parallel_for(queries.size(), eval);
  } else {
    for (std::size_t q = 0; q < queries.size(); ++q) eval(q);
  }
  int wrong = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (predicted[q] != queries[q].class_id) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(queries.size());
}

std::map<int, int> per_class_counts(const std::vector<Gesture>& gestures) {
  std::map<int, int> counts;
  for (const auto& g : gestures) counts[g.class_id]++;
  return counts;
}

std::vector<Gesture> make_synthetic(const std::string& augmenter, const Dataset& d,
                                    const std::vector<Gesture>& train, const EvalOptions& opt,
                                    const Checkpoint* model, std::uint64_t seed) {
  if (augmenter == "baseline") return {};
  if (augmenter == "noise") {
    // Extents always come from the full training split; counts follow
    // each class's own size so imbalanced classes keep their ratio.
    std::vector<Gesture> synth;
    Rng rng(mix_seed(seed, kNoiseSalt));
    const Vector sigma = opt.noise_magnitude * feature_extent(train);
    for (const auto& [class_id, indices] : indices_by_class(train)) {
      const int want =
          static_cast<int>(std::lround(opt.synth_ratio * static_cast<double>(indices.size())));
      if (want <= 0) continue;
      auto part = noisy_copies(train, indices, sigma, want, rng);
      synth.insert(synth.end(), part.begin(), part.end());
    }
    return synth;
  }
  if (augmenter == "deepnag") {
    if (!model) throw UsageError("augmenter 'deepnag' requires a generator checkpoint");
    if (model->class_count != d.class_count) {
      throw DataError("checkpoint class count does not match dataset");
    }
    if (model->length != d.length() || model->params.output_dims() != d.dims()) {
      throw DataError("checkpoint gesture shape does not match dataset");
    }
    std::vector<Gesture> synth;
    for (const auto& [class_id, count] : per_class_counts(train)) {
      const int want = static_cast<int>(std::lround(opt.synth_ratio * count));
      if (want <= 0) continue;
      auto part = generate(*model, class_id, want, mix_seed(seed, kGenSalt));
      synth.insert(synth.end(), part.begin(), part.end());
    }
    return synth;
  }
  throw UsageError("unknown augmenter '" + augmenter + "'");
}

}  // namespace

std::vector<ExperimentResult> run_experiment(const Dataset& d, const EvalOptions& opt,
                                             const Checkpoint* model) {
  if (opt.seeds.empty()) throw UsageError("run_experiment: need at least one seed");
  if (opt.augmenters.empty()) throw UsageError("run_experiment: need at least one augmenter");
  if (opt.synth_ratio < 0.0) throw UsageError("run_experiment: synth_ratio must be >= 0");

  ThreadPool pool(opt.workers);
  std::vector<ExperimentResult> results;
  for (const std::uint64_t seed : opt.seeds) {
    const SplitSpec split = split_subject_independent(d, opt.fractions, seed);
    const auto train = gestures_for_subjects(d, split.train_subjects);
    const auto validation = gestures_for_subjects(d, split.validation_subjects);
    const auto test = gestures_for_subjects(d, split.test_subjects);
    if (train.empty() || validation.empty() || test.empty()) {
      throw DataError("split produced an empty partition (seed " + std::to_string(seed) + ")");
    }

    for (const auto& augmenter : opt.augmenters) {
      std::vector<Gesture> templates = train;
      const auto synth = make_synthetic(augmenter, d, train, opt, model, seed);
      templates.insert(templates.end(), synth.begin(), synth.end());

      // Model selection on validation: pick the cost kind, ED on ties.
      const double val_ed = error_rate(templates, validation, CostKind::ED, &pool);
      const double val_cos = error_rate(templates, validation, CostKind::COS, &pool);
      const CostKind kind = val_cos < val_ed ? CostKind::COS : CostKind::ED;

      ExperimentResult r;
      r.dataset = opt.dataset_name;
      r.recognizer = "knn1-dtw";
      r.augmenter = augmenter;
      r.seed = seed;
      r.error = error_rate(templates, test, kind, &pool);
      r.n_train_real = static_cast<int>(train.size());
      r.n_train_synth = static_cast<int>(synth.size());
      results.push_back(std::move(r));
    }
  }
  return results;
}

ScoreTable score_generators(const std::vector<ExperimentResult>& results) {
  // Group rows by (dataset, recognizer, seed).
  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<const ExperimentResult*>>
      groups;
  for (const auto& r : results) groups[{r.dataset, r.recognizer, r.seed}].push_back(&r);

  // Stable row order: first appearance in the result list.
  ScoreTable table;
  const auto row_for = [&table](const std::string& augmenter) -> ScoreRow& {
    for (auto& row : table.rows) {
      if (row.augmenter == augmenter) return row;
    }
    table.rows.push_back(ScoreRow{augmenter, 0, 0, 0});
    return table.rows.back();
  };
  for (const auto& r : results) {
    if (r.augmenter != "baseline" && r.augmenter != "noise") row_for(r.augmenter);
  }

  for (const auto& [key, rows] : groups) {
    const ExperimentResult* baseline = nullptr;
    const ExperimentResult* noise = nullptr;
    std::vector<const ExperimentResult*> generators;
    for (const auto* r : rows) {
      if (r->augmenter == "baseline") {
        baseline = r;
      } else if (r->augmenter == "noise") {
        noise = r;
      } else {
        generators.push_back(r);
      }
    }
    const auto& [ds, rec, seed] = key;
    if (!baseline || !noise) {
      throw DataError("experiment group (" + ds + ", " + rec + ", seed " + std::to_string(seed) +
                      ") is missing its baseline or noise row");
    }
    table.groups += 1;
    if (generators.empty()) continue;

    double min_err = generators.front()->error;
    for (const auto* g : generators) min_err = std::min(min_err, g->error);
    std::vector<const ExperimentResult*> at_min;
    for (const auto* g : generators) {
      if (g->error == min_err) at_min.push_back(g);
    }
    // +1 only when the group minimum also strictly beats baseline and
    // noise; shared minima all score (still subject to that condition).
    if (min_err < baseline->error && min_err < noise->error) {
      for (const auto* g : at_min) {
        ScoreRow& row = row_for(g->augmenter);
        row.score += 1;
        if (at_min.size() == 1) {
          row.wins += 1;
        } else {
          row.ties += 1;
        }
      }
    }
  }
  return table;
}

void write_results_csv(const std::vector<ExperimentResult>& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write results file: " + path);
  out << "dataset,recognizer,augmenter,seed,error,n_train_real,n_train_synth\n";
  for (const auto& r : results) {
    out << r.dataset << ',' << r.recognizer << ',' << r.augmenter << ',' << r.seed << ','
        << format_double(r.error) << ',' << r.n_train_real << ',' << r.n_train_synth << '\n';
  }
  if (!out) throw DataError("failed while writing results file: " + path);
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string format_results_table(const std::vector<ExperimentResult>& results) {
  std::ostringstream out;
  out << pad("dataset", 12) << pad("recognizer", 12) << pad("augmenter", 12) << pad("seed", 6)
      << pad("error", 10) << pad("real", 6) << "synth\n";
  for (const auto& r : results) {
    std::ostringstream err;
    err.setf(std::ios::fixed);
    err.precision(4);
    err << r.error;
    out << pad(r.dataset, 12) << pad(r.recognizer, 12) << pad(r.augmenter, 12)
        << pad(std::to_string(r.seed), 6) << pad(err.str(), 10)
        << pad(std::to_string(r.n_train_real), 6) << r.n_train_synth << '\n';
  }
  return out.str();
}

std::string format_score_table(const ScoreTable& table) {
  std::ostringstream out;
  out << "scores over " << table.groups << " experiment group" << (table.groups == 1 ? "" : "s")
      << "\n";
  out << pad("generator", 12) << pad("score", 7) << pad("wins", 6) << "ties\n";
  for (const auto& row : table.rows) {
    out << pad(row.augmenter, 12) << pad(std::to_string(row.score), 7)
        << pad(std::to_string(row.wins), 6) << row.ties << '\n';
  }
  return out.str();
}

}  // namespace deepnag
