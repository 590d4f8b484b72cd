#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "deepnag/augment.hpp"
#include "deepnag/toy.hpp"
#include "oracles.hpp"

using namespace deepnag;
namespace fs = std::filesystem;

namespace {

ExperimentResult row(const std::string& augmenter, std::uint64_t seed, double error) {
  ExperimentResult r;
  r.dataset = "toy";
  r.recognizer = "knn1-dtw";
  r.augmenter = augmenter;
  r.seed = seed;
  r.error = error;
  r.n_train_real = 10;
  r.n_train_synth = augmenter == "baseline" ? 0 : 10;
  return r;
}

const ScoreRow& find_row(const ScoreTable& table, const std::string& augmenter) {
  for (const ScoreRow& r : table.rows) {
    if (r.augmenter == augmenter) return r;
  }
  REQUIRE(false);
  static ScoreRow dummy;
  return dummy;
}

}  // namespace

TEST_CASE("knn1_dtw_classify: exact hits, singletons, tie to lowest index") {
  const Dataset toy = make_toy_dataset(4, 2, 12, 3);
  const std::vector<Gesture>& all = toy.gestures;

  // A query identical to a template lands on that template's class.
  for (const Gesture& g : all) {
    CHECK(knn1_dtw_classify(all, g, CostKind::ED) == g.class_id);
  }

  const std::vector<Gesture> single{all[5]};
  CHECK(knn1_dtw_classify(single, all[0], CostKind::ED) == all[5].class_id);
  CHECK(knn1_dtw_classify(single, all[0], CostKind::COS) == all[5].class_id);

  // Two identical templates with different labels: the tie goes to the
  // lower index.
  Gesture relabeled = all[0];
  relabeled.class_id = all[0].class_id + 1;
  const std::vector<Gesture> tied{all[0], relabeled};
  CHECK(knn1_dtw_classify(tied, all[0], CostKind::ED) == all[0].class_id);
  const std::vector<Gesture> tied_rev{relabeled, all[0]};
  CHECK(knn1_dtw_classify(tied_rev, all[0], CostKind::ED) == relabeled.class_id);

  CHECK_THROWS_AS(knn1_dtw_classify({}, all[0], CostKind::ED), DataError);
}

TEST_CASE("knn1_dtw_classify: agrees with the exhaustive oracle, pooled or not") {
  const Dataset toy = make_toy_dataset(5, 3, 10, 11);
  std::vector<Gesture> templates(toy.gestures.begin(), toy.gestures.begin() + 9);
  ThreadPool pool(3);
  for (std::size_t q = 9; q < toy.gestures.size(); ++q) {
    const Gesture& query = toy.gestures[q];
    for (CostKind kind : {CostKind::ED, CostKind::COS}) {
      const int expect = oracle::knn1_scan(templates, query, kind);
      CHECK(knn1_dtw_classify(templates, query, kind) == expect);
      CHECK(knn1_dtw_classify(templates, query, kind, &pool) == expect);
    }
  }
}

TEST_CASE("noise_augment: zero magnitude copies, ids, per-class counts") {
  const Dataset toy = make_toy_dataset(3, 2, 8, 7);
  Rng rng(19);
  const std::vector<Gesture> synth = noise_augment(toy.gestures, 0.0, 4, rng);
  REQUIRE(synth.size() == 12);  // 3 classes x 4

  std::map<int, int> per_class;
  for (const Gesture& g : synth) {
    per_class[g.class_id] += 1;
    CHECK(g.subject_id == -1);
    CHECK(g.id.find("-n") != std::string::npos);
    // Magnitude zero reproduces some source gesture exactly.
    bool matched = false;
    for (const Gesture& src : toy.gestures) {
      if (src.class_id == g.class_id &&
          (src.points - g.points).cwiseAbs().maxCoeff() == 0.0) {
        matched = true;
        break;
      }
    }
    CHECK(matched);
  }
  for (int c = 0; c < 3; ++c) CHECK(per_class[c] == 4);

  Rng r1(23), r2(23);
  const auto a = noise_augment(toy.gestures, 0.05, 3, r1);
  const auto b = noise_augment(toy.gestures, 0.05, 3, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK((a[i].points - b[i].points).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(noise_augment({}, 0.1, 1, r1), DataError);
  CHECK_THROWS_AS(noise_augment(toy.gestures, -0.1, 1, r1), UsageError);
  CHECK_THROWS_AS(noise_augment(toy.gestures, 0.1, -1, r1), UsageError);
}

TEST_CASE("noise_augment: jitter sigma tracks the per-feature extent") {
  // One source gesture with x extent 1 and y extent 2, so the requested
  // 2% magnitude means sigma_x = 0.02 and sigma_y = 0.04 exactly.
  Gesture src;
  src.points.resize(2, 4);
  src.points << 0.0, 0.25, 0.75, 1.0, 0.0, 2.0, 0.5, 1.5;
  src.class_id = 0;
  src.id = "src";

  Rng rng(31);
  const std::vector<Gesture> synth = noise_augment({src}, 0.02, 600, rng);
  REQUIRE(synth.size() == 600);
  double sx = 0.0, sy = 0.0;
  int n = 0;
  for (const Gesture& g : synth) {
    for (int c = 0; c < 4; ++c) {
      const double dx = g.points(0, c) - src.points(0, c);
      const double dy = g.points(1, c) - src.points(1, c);
      sx += dx * dx;
      sy += dy * dy;
      ++n;
    }
  }
  const double std_x = std::sqrt(sx / n), std_y = std::sqrt(sy / n);
  CHECK(std_x == doctest::Approx(0.02).epsilon(0.2));
  CHECK(std_y == doctest::Approx(0.04).epsilon(0.2));
}

TEST_CASE("run_experiment: baseline and noise accounting on the toy data") {
  const Dataset toy = make_toy_dataset(8, 6, 10, 13);
  EvalOptions opt;
  opt.dataset_name = "toy";
  opt.seeds = {1, 2};
  opt.augmenters = {"baseline", "noise"};
  opt.workers = 1;

  const std::vector<ExperimentResult> results = run_experiment(toy, opt, nullptr);
  REQUIRE(results.size() == 4);  // 2 seeds x 2 augmenters

  for (const ExperimentResult& r : results) {
    CHECK(r.dataset == "toy");
    CHECK(r.recognizer == "knn1-dtw");
    CHECK(r.error >= 0.0);
    CHECK(r.error <= 1.0);
    const SplitSpec split = split_subject_independent(toy, opt.fractions, r.seed);
    const auto train = gestures_for_subjects(toy, split.train_subjects);
    CHECK(r.n_train_real == static_cast<int>(train.size()));
    if (r.augmenter == "baseline") {
      CHECK(r.n_train_synth == 0);
    } else {
      REQUIRE(r.augmenter == "noise");
      // synth_ratio 1.0 doubles every class.
      CHECK(r.n_train_synth == r.n_train_real);
    }
  }
  // Row order: augmenters within seed, seeds outer.
  CHECK(results[0].seed == 1);
  CHECK(results[0].augmenter == "baseline");
  CHECK(results[1].seed == 1);
  CHECK(results[1].augmenter == "noise");
  CHECK(results[2].seed == 2);

  // Same options, same results (error values included).
  const std::vector<ExperimentResult> again = run_experiment(toy, opt, nullptr);
  REQUIRE(again.size() == results.size());
  for (std::size_t i = 0; i < results.size(); ++i) CHECK(again[i].error == results[i].error);
}

TEST_CASE("run_experiment: generator augmentation and its validations") {
  const Dataset toy = make_toy_dataset(6, 6, 10, 17);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.latent_dims = 3;
  cfg.length = 10;
  cfg.hidden_sizes = {5};
  cfg.max_steps = 2;
  cfg.seed = 9;
  cfg.workers = 1;
  const TrainResult trained = train(toy, cfg);

  EvalOptions opt;
  opt.dataset_name = "toy";
  opt.seeds = {4};
  opt.synth_ratio = 0.5;
  opt.workers = 1;
  const std::vector<ExperimentResult> results = run_experiment(toy, opt, &trained.final);
  REQUIRE(results.size() == 3);
  CHECK(results[2].augmenter == "deepnag");
  CHECK(results[2].n_train_synth > 0);
  // Ratio 0.5 yields about half as many synthetic as real samples; exact
  // value depends on per-class rounding.
  CHECK(results[2].n_train_synth <= results[2].n_train_real);
  for (const Gesture& g : toy.gestures) (void)g;  // dataset untouched by value semantics

  EvalOptions gen_only = opt;
  gen_only.augmenters = {"baseline", "noise", "deepnag"};
  CHECK_THROWS_AS(run_experiment(toy, gen_only, nullptr), UsageError);

  Checkpoint wrong_shape = trained.final;
  wrong_shape.length = 99;
  CHECK_THROWS_AS(run_experiment(toy, gen_only, &wrong_shape), DataError);

  EvalOptions bogus = opt;
  bogus.augmenters = {"baseline", "noise", "warp"};
  CHECK_THROWS_AS(run_experiment(toy, bogus, &trained.final), UsageError);

  EvalOptions no_seeds = opt;
  no_seeds.seeds = {};
  CHECK_THROWS_AS(run_experiment(toy, no_seeds, &trained.final), UsageError);
}

TEST_CASE("score_generators: the three canonical outcomes") {
  // A clean win: strictly below baseline, noise, and the other generator.
  {
    const std::vector<ExperimentResult> results{
        row("baseline", 1, 0.20), row("noise", 1, 0.15), row("deepnag", 1, 0.10),
        row("other-gen", 1, 0.12)};
    const ScoreTable t = score_generators(results);
    CHECK(t.groups == 1);
    CHECK(find_row(t, "deepnag").score == 1);
    CHECK(find_row(t, "deepnag").wins == 1);
    CHECK(find_row(t, "deepnag").ties == 0);
    CHECK(find_row(t, "other-gen").score == 0);
  }
  // A shared minimum below both references: both share the point as a tie.
  {
    const std::vector<ExperimentResult> results{
        row("baseline", 1, 0.20), row("noise", 1, 0.15), row("deepnag", 1, 0.10),
        row("other-gen", 1, 0.10)};
    const ScoreTable t = score_generators(results);
    CHECK(find_row(t, "deepnag").score == 1);
    CHECK(find_row(t, "deepnag").ties == 1);
    CHECK(find_row(t, "deepnag").wins == 0);
    CHECK(find_row(t, "other-gen").score == 1);
    CHECK(find_row(t, "other-gen").ties == 1);
  }
  // Best generator but not below the baseline: no point.
  {
    const std::vector<ExperimentResult> results{
        row("baseline", 1, 0.10), row("noise", 1, 0.15), row("deepnag", 1, 0.12)};
    const ScoreTable t = score_generators(results);
    CHECK(find_row(t, "deepnag").score == 0);
    CHECK(find_row(t, "deepnag").wins == 0);
    CHECK(find_row(t, "deepnag").ties == 0);
  }
  // Matching the noise augmenter exactly is not "strictly below".
  {
    const std::vector<ExperimentResult> results{
        row("baseline", 1, 0.20), row("noise", 1, 0.10), row("deepnag", 1, 0.10)};
    const ScoreTable t = score_generators(results);
    CHECK(find_row(t, "deepnag").score == 0);
  }
}

TEST_CASE("score_generators: accumulation, ordering, and missing references") {
  std::vector<ExperimentResult> results{
      row("baseline", 1, 0.20), row("noise", 1, 0.15), row("deepnag", 1, 0.10),
      row("baseline", 2, 0.10), row("noise", 2, 0.12), row("deepnag", 2, 0.30),
      row("baseline", 3, 0.20), row("noise", 3, 0.18), row("deepnag", 3, 0.05)};
  const ScoreTable t = score_generators(results);
  CHECK(t.groups == 3);
  CHECK(find_row(t, "deepnag").score == 2);
  CHECK(find_row(t, "deepnag").wins == 2);

  // Row order does not change any score.
  std::vector<ExperimentResult> shuffled = results;
  std::reverse(shuffled.begin(), shuffled.end());
  const ScoreTable t2 = score_generators(shuffled);
  CHECK(find_row(t2, "deepnag").score == 2);
  CHECK(t2.groups == 3);

  // Baseline-and-noise-only input still counts its groups.
  const ScoreTable empty_gen = score_generators({row("baseline", 1, 0.2), row("noise", 1, 0.1)});
  CHECK(empty_gen.groups == 1);
  CHECK(empty_gen.rows.empty());

  CHECK_THROWS_AS(score_generators({row("noise", 1, 0.1), row("deepnag", 1, 0.2)}), DataError);
  CHECK_THROWS_AS(score_generators({row("baseline", 1, 0.1), row("deepnag", 1, 0.2)}), DataError);
}

TEST_CASE("write_results_csv: golden output") {
  const fs::path dir = fs::temp_directory_path() / "deepnag-test-augment";
  fs::create_directories(dir);
  const fs::path path = dir / "results.csv";

  std::vector<ExperimentResult> results{row("baseline", 1, 0.125), row("deepnag", 2, 0.0625)};
  results[0].n_train_real = 24;
  results[0].n_train_synth = 0;
  results[1].n_train_real = 24;
  results[1].n_train_synth = 24;
  write_results_csv(results, path.string());

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text ==
        "dataset,recognizer,augmenter,seed,error,n_train_real,n_train_synth\n"
        "toy,knn1-dtw,baseline,1,0.125,24,0\n"
        "toy,knn1-dtw,deepnag,2,0.0625,24,24\n");

  CHECK_THROWS_AS(write_results_csv(results, (dir / "no-such-dir" / "x.csv").string()), DataError);
}

TEST_CASE("format tables: readable summaries") {
  const std::vector<ExperimentResult> results{row("baseline", 1, 0.5), row("deepnag", 1, 0.25)};
  const std::string table = format_results_table(results);
  CHECK(table.find("dataset") != std::string::npos);
  CHECK(table.find("augmenter") != std::string::npos);
  CHECK(table.find("baseline") != std::string::npos);
  CHECK(table.find("0.2500") != std::string::npos);

  ScoreTable st;
  st.groups = 2;
  st.rows.push_back(ScoreRow{"deepnag", 2, 1, 1});
  const std::string scores = format_score_table(st);
  CHECK(scores.find("scores over 2 experiment groups") != std::string::npos);
  CHECK(scores.find("deepnag") != std::string::npos);
  CHECK(scores.find("wins") != std::string::npos);
}
