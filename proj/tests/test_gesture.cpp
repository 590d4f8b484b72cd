#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "deepnag/dataset.hpp"
#include "deepnag/gesture.hpp"
#include "oracles.hpp"

using namespace deepnag;
namespace fs = std::filesystem;

namespace {

double max_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return (a - b).cwiseAbs().maxCoeff();
}

Matrix points2d(const std::vector<std::pair<double, double>>& pts) {
  Matrix m(2, static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m(0, i) = pts[i].first;
    m(1, i) = pts[i].second;
  }
  return m;
}

// Dense polyline around a circle; smooth enough that chord lengths of a
// resample are uniform.
Matrix circle_points(int count, double radius) {
  Matrix m(2, count);
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * M_PI * i / (count - 1);
    m(0, i) = radius * std::cos(a);
    m(1, i) = radius * std::sin(a);
  }
  return m;
}

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "deepnag-test-gesture";
  fs::create_directories(dir);
  return dir;
}

Gesture make_gesture(const Matrix& pts, int class_id, int subject_id, const std::string& id) {
  Gesture g;
  g.points = pts;
  g.class_id = class_id;
  g.subject_id = subject_id;
  g.id = id;
  return g;
}

}  // namespace

TEST_CASE("resample: straight line to three points") {
  const Matrix out = resample_points(points2d({{0, 0}, {1, 0}}), 3);
  CHECK(max_diff(out, points2d({{0, 0}, {0.5, 0}, {1, 0}})) == 0.0);
}

TEST_CASE("resample: already equidistant input is (near) identity") {
  const Matrix in = points2d({{0, 0}, {0.25, 0.25}, {0.5, 0.5}, {0.75, 0.75}, {1, 1}});
  CHECK(max_diff(resample_points(in, 5), in) <= 1e-9);
}

TEST_CASE("resample: right angle lands on hand-computed arc positions") {
  const Matrix corner = points2d({{0, 0}, {1, 0}, {1, 1}});
  // Arc positions {0, 0.5, 1.0, 1.5, 2.0} along the corner path.
  const Matrix expect = points2d({{0, 0}, {0.5, 0}, {1, 0}, {1, 0.5}, {1, 1}});
  CHECK(max_diff(resample_points(corner, 5), expect) <= 1e-12);

  for (int len : {4, 5, 7, 9})
    CHECK(max_diff(resample_points(corner, len), oracle::resample_scan(corner, len)) <= 1e-12);
}

TEST_CASE("resample: endpoints preserved exactly, count honored") {
  Rng rng(11);
  std::normal_distribution<double> normal;
  Matrix raw(3, 9);
  for (int c = 0; c < raw.cols(); ++c)
    for (int r = 0; r < raw.rows(); ++r) raw(r, c) = normal(rng);
  const Matrix out = resample_points(raw, 17);
  CHECK(out.cols() == 17);
  CHECK((out.col(0) - raw.col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.col(16) - raw.col(8)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_diff(out, oracle::resample_scan(raw, 17)) <= 1e-9);
}

TEST_CASE("resample: uniform spacing along the input polyline") {
  // Chord lengths are uniform for constant-curvature inputs...
  const Matrix line = resample_points(points2d({{0, 0}, {3, 4}}), 9);
  const Matrix chords = path_vectors(line).colwise().norm();
  CHECK(chords.maxCoeff() - chords.minCoeff() <= 1e-9 * chords.maxCoeff());

  const Matrix circ = resample_points(circle_points(400, 0.5), 16);
  const Matrix cc = path_vectors(circ).colwise().norm();
  CHECK(cc.maxCoeff() - cc.minCoeff() <= 1e-4 * cc.maxCoeff());

  // ...while corner inputs are equidistant in arc length (the oracle
  // walks arc length independently), though chords may shorten across
  // the corner.
  const Matrix corner = points2d({{0, 0}, {1, 0}, {1, 1}});
  CHECK(max_diff(resample_points(corner, 4), oracle::resample_scan(corner, 4)) <= 1e-12);
}

TEST_CASE("resample: idempotent on smooth inputs") {
  const Matrix once = resample_points(circle_points(500, 1.0), 24);
  CHECK(max_diff(resample_points(once, 24), once) <= 1e-5);
  const Matrix line_once = resample_points(points2d({{0, 0}, {2, 1}}), 8);
  CHECK(max_diff(resample_points(line_once, 8), line_once) <= 1e-12);
}

TEST_CASE("resample: degenerate inputs fail loudly, never NaN") {
  CHECK_THROWS_AS(resample_points(points2d({{1, 1}}), 4), DataError);
  CHECK_THROWS_AS(resample_points(points2d({{1, 1}, {1, 1}, {1, 1}}), 4), DataError);
  CHECK_THROWS_AS(resample_points(points2d({{0, 0}, {1, 0}}), 1), UsageError);
  Matrix bad = points2d({{0, 0}, {1, 0}});
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(resample_points(bad, 4), DataError);
}

TEST_CASE("vector_path: differences with cardinality L-1") {
  const Matrix constant = Matrix::Constant(2, 4, 3.0);
  CHECK(path_vectors(constant).cwiseAbs().maxCoeff() == 0.0);

  const Matrix line = points2d({{0, 0}, {0.5, 0}, {1, 0}});
  const Matrix v = path_vectors(line);
  CHECK(v.cols() == 2);
  CHECK(max_diff(v, points2d({{0.5, 0}, {0.5, 0}})) == 0.0);

  CHECK(path_vectors(Matrix::Random(3, 64)).cols() == 63);
  CHECK_THROWS_AS(path_vectors(Matrix::Zero(2, 1)), DataError);
}

TEST_CASE("mean_segment_length: hand values") {
  CHECK(mean_segment_length(points2d({{0, 0}, {0.5, 0}, {1, 0}})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mean_segment_length(Matrix::Constant(2, 5, 1.0)) == 0.0);
  Matrix seg(1, 3);
  seg << 0.0, 0.4, 1.0;  // segments 0.4 and 0.6
  CHECK(mean_segment_length(seg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("normalize: centering and scaling hand values") {
  CHECK(max_diff(normalize_points(points2d({{0, 0}, {2, 0}})), points2d({{-1, 0}, {1, 0}})) == 0.0);

  const Matrix square = points2d({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  CHECK(max_diff(normalize_points(square), points2d({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})) == 0.0);
}

TEST_CASE("normalize: range, idempotence, errors") {
  Rng rng(3);
  std::normal_distribution<double> normal(5.0, 2.0);
  Matrix raw(2, 12);
  for (int c = 0; c < raw.cols(); ++c)
    for (int r = 0; r < raw.rows(); ++r) raw(r, c) = normal(rng);
  const Matrix n1 = normalize_points(raw);
  CHECK(n1.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(n1.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_diff(normalize_points(n1), n1) <= 1e-9);
  CHECK_THROWS_AS(normalize_points(Matrix::Constant(2, 4, 7.0)), DataError);
}

TEST_CASE("split: exact and largest-remainder partition sizes") {
  auto dataset_with_subjects = [](int count) {
    Dataset d;
    for (int s = 0; s < count; ++s)
      d.gestures.push_back(make_gesture(Matrix::Zero(2, 4), 0, s, "g" + std::to_string(s)));
    d.class_count = 1;
    d.class_id_map = {0};
    return d;
  };

  const SplitSpec ten = split_subject_independent(dataset_with_subjects(10), {0.5, 0.2, 0.3}, 1);
  CHECK(ten.train_subjects.size() == 5);
  CHECK(ten.validation_subjects.size() == 2);
  CHECK(ten.test_subjects.size() == 3);

  const SplitSpec seven = split_subject_independent(dataset_with_subjects(7), {0.5, 0.2, 0.3}, 1);
  CHECK(seven.train_subjects.size() == 4);
  CHECK(seven.validation_subjects.size() == 1);
  CHECK(seven.test_subjects.size() == 2);

  // Determinism plus the disjoint/exhaustive property across sizes.
  for (int count : {3, 4, 7, 13, 26, 50}) {
    const Dataset d = dataset_with_subjects(count);
    const SplitSpec a = split_subject_independent(d, {0.5, 0.2, 0.3}, 99);
    const SplitSpec b = split_subject_independent(d, {0.5, 0.2, 0.3}, 99);
    CHECK(a.train_subjects == b.train_subjects);
    CHECK(a.validation_subjects == b.validation_subjects);
    CHECK(a.test_subjects == b.test_subjects);
    std::set<int> seen;
    for (int s : a.train_subjects) CHECK(seen.insert(s).second);
    for (int s : a.validation_subjects) CHECK(seen.insert(s).second);
    for (int s : a.test_subjects) CHECK(seen.insert(s).second);
    CHECK(static_cast<int>(seen.size()) == count);
    CHECK(!a.train_subjects.empty());
    CHECK(!a.validation_subjects.empty());
    CHECK(!a.test_subjects.empty());
  }

  CHECK_THROWS_AS(split_subject_independent(dataset_with_subjects(2), {0.5, 0.2, 0.3}, 1),
                  DataError);
  CHECK_THROWS_AS(split_subject_independent(dataset_with_subjects(5), {0.5, 0.2, 0.2}, 1),
                  UsageError);
  CHECK_THROWS_AS(split_subject_independent(dataset_with_subjects(5), {1.0, 0.0, 0.0}, 1),
                  UsageError);
}

TEST_CASE("prepare_dataset: resample + normalize + remap, rejects degenerates") {
  std::vector<Gesture> raw;
  raw.push_back(make_gesture(points2d({{0, 0}, {4, 0}, {4, 4}}), 0, 0, "ok-a"));
  raw.push_back(make_gesture(points2d({{1, 1}}), 2, 1, "single-point"));
  raw.push_back(make_gesture(points2d({{0, 0}, {1, 2}, {3, 1}}), 2, 1, "ok-b"));

  PrepareReport report;
  const Dataset d = prepare_dataset(raw, 8, &report);
  CHECK(d.gestures.size() == 2);
  CHECK(d.class_count == 2);
  CHECK(d.class_id_map == std::vector<int>{0, 2});
  CHECK(d.gestures[0].class_id == 0);
  CHECK(d.gestures[1].class_id == 1);  // remapped from source id 2
  CHECK(d.length() == 8);
  for (const Gesture& g : d.gestures) CHECK(g.points.cwiseAbs().maxCoeff() <= 1.0);
  REQUIRE(report.rejected.size() == 1);
  CHECK(report.rejected[0].id == "single-point");

  const std::vector<Gesture> all_bad = {make_gesture(points2d({{1, 1}}), 0, 0, "bad")};
  CHECK_THROWS_AS(prepare_dataset(all_bad, 8, nullptr), DataError);
}

TEST_CASE("dataset json round trip is bit exact") {
  std::vector<Gesture> raw;
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 4; ++k) {
    Matrix pts(2, 6);
    for (int c = 0; c < 6; ++c)
      for (int r = 0; r < 2; ++r) pts(r, c) = normal(rng);
    raw.push_back(make_gesture(pts, k % 2, k, "rt-" + std::to_string(k)));
  }
  const Dataset d = prepare_dataset(raw, 6, nullptr);

  const fs::path path = test_dir() / "roundtrip.jsonl";
  save_dataset(d, path.string());
  const Dataset back = load_dataset(path.string());

  REQUIRE(back.gestures.size() == d.gestures.size());
  CHECK(back.class_count == d.class_count);
  for (std::size_t i = 0; i < d.gestures.size(); ++i) {
    CHECK(back.gestures[i].id == d.gestures[i].id);
    CHECK(back.gestures[i].class_id == d.gestures[i].class_id);
    CHECK(back.gestures[i].subject_id == d.gestures[i].subject_id);
    CHECK(max_diff(back.gestures[i].points, d.gestures[i].points) == 0.0);
  }

  // Saving what was loaded reproduces the same bytes.
  const fs::path path2 = test_dir() / "roundtrip2.jsonl";
  save_dataset(back, path2.string());
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("dataset load: malformed lines name their line number") {
  const fs::path path = test_dir() / "malformed.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"a","class":0,"subject":0,"points":[[0,0],[1,1]]})" << "\n";
    out << "{not json}\n";
  }
  try {
    load_gesture_records(path.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("dataset load: class gaps remap and report, shape mismatches fail") {
  const fs::path path = test_dir() / "gaps.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"a","class":0,"subject":0,"points":[[0,0],[1,1]]})" << "\n";
    out << R"({"id":"b","class":2,"subject":1,"points":[[0,1],[1,0]]})" << "\n";
  }
  const Dataset d = load_dataset(path.string());
  CHECK(d.class_count == 2);
  CHECK(d.class_id_map == std::vector<int>{0, 2});
  CHECK(d.gestures[0].class_id == 0);
  CHECK(d.gestures[1].class_id == 1);

  const fs::path bad = test_dir() / "raggedy.jsonl";
  {
    std::ofstream out(bad);
    out << R"({"id":"a","class":0,"subject":0,"points":[[0,0],[1,1]]})" << "\n";
    out << R"({"id":"b","class":0,"subject":1,"points":[[0,1,5],[1,0,5]]})" << "\n";
  }
  CHECK_THROWS_AS(load_dataset(bad.string()), DataError);
}

TEST_CASE("csv import: grouping, ordering, optional header, errors") {
  const fs::path path = test_dir() / "import.csv";
  {
    std::ofstream out(path);
    out << "id,class,subject,t,x,y\n";
    out << "g1,0,0,1,0.5,0.0\n";   // out of order on purpose
    out << "g1,0,0,0,0.0,0.0\n";
    out << "g2,1,1,0,1.0,1.0\n";
    out << "g1,0,0,2,1.0,0.0\n";
    out << "g2,1,1,1,2.0,2.0\n";
  }
  const std::vector<Gesture> gs = import_csv(path.string());
  REQUIRE(gs.size() == 2);
  CHECK(gs[0].id == "g1");  // first-seen order
  CHECK(gs[0].class_id == 0);
  CHECK(gs[0].subject_id == 0);
  CHECK(max_diff(gs[0].points, points2d({{0, 0}, {0.5, 0}, {1, 0}})) == 0.0);  // sorted by t
  CHECK(gs[1].id == "g2");
  CHECK(gs[1].points.cols() == 2);

  const fs::path path3d = test_dir() / "import3d.csv";
  {
    std::ofstream out(path3d);
    out << "g1,0,0,0,0.0,0.0,5.0\n";  // headerless, 7 columns -> 3D
    out << "g1,0,0,1,1.0,0.0,6.0\n";
  }
  const std::vector<Gesture> g3 = import_csv(path3d.string());
  REQUIRE(g3.size() == 1);
  CHECK(g3[0].dims() == 3);
  CHECK(g3[0].points(2, 1) == 6.0);

  const fs::path bad = test_dir() / "import-bad.csv";
  {
    std::ofstream out(bad);
    out << "id,class,subject,t,x,y\n";
    out << "g1,0,0,0,0.0\n";  // too few columns
  }
  try {
    import_csv(bad.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
