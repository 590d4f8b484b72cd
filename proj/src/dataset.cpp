#include "deepnag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace deepnag {

using ordered_json = nlohmann::ordered_json;

std::vector<int> Dataset::subject_ids() const {
  std::set<int> s;
  for (const auto& g : gestures) s.insert(g.subject_id);
  return {s.begin(), s.end()};
}

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (const auto& g : gestures) counts[static_cast<std::size_t>(g.class_id)]++;
  return counts;
}

namespace {

bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

bool SplitSpec::in_train(int subject) const { return contains(train_subjects, subject); }
bool SplitSpec::in_validation(int subject) const { return contains(validation_subjects, subject); }
bool SplitSpec::in_test(int subject) const { return contains(test_subjects, subject); }

SplitSpec split_subject_independent(const Dataset& d,
                                    const std::array<double, 3>& fractions,
                                    std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f > 0.0)) throw UsageError("split fractions must be positive");
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");

  std::vector<int> subjects = d.subject_ids();
  const int s = static_cast<int>(subjects.size());
  if (s < 3) throw DataError("subject-independent split needs at least 3 subjects, got " +
                             std::to_string(s));

  Rng rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);

  // Largest-remainder rounding of fraction * subject_count; remainder
  // ties go to the earlier partition (train, validation, test).
  std::array<int, 3> size{};
  std::array<double, 3> remainder{};
  int assigned = 0;
  for (int p = 0; p < 3; ++p) {
    const double exact = fractions[static_cast<std::size_t>(p)] * s;
    size[static_cast<std::size_t>(p)] = static_cast<int>(std::floor(exact));
    remainder[static_cast<std::size_t>(p)] = exact - std::floor(exact);
    assigned += size[static_cast<std::size_t>(p)];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
  });
  for (int i = 0; i < s - assigned; ++i) size[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]++;

  SplitSpec spec;
  spec.fractions = fractions;
  spec.seed = seed;
  auto it = subjects.begin();
  spec.train_subjects.assign(it, it + size[0]);
  it += size[0];
  spec.validation_subjects.assign(it, it + size[1]);
  it += size[1];
  spec.test_subjects.assign(it, subjects.end());
  return spec;
}

std::vector<Gesture> gestures_for_subjects(const Dataset& d, const std::vector<int>& subjects) {
  std::vector<Gesture> out;
  for (const auto& g : d.gestures) {
    if (contains(subjects, g.subject_id)) out.push_back(g);
  }
  return out;
}

namespace {

// Remaps class ids so they are contiguous starting at zero; returns the
// new-id -> original-id table.
std::vector<int> remap_classes(std::vector<Gesture>& gestures) {
  std::set<int> ids;
  for (const auto& g : gestures) ids.insert(g.class_id);
  std::vector<int> map(ids.begin(), ids.end());
  for (auto& g : gestures) {
    const auto pos = std::lower_bound(map.begin(), map.end(), g.class_id);
    g.class_id = static_cast<int>(pos - map.begin());
  }
  return map;
}

void check_uniform_shape(const std::vector<Gesture>& gestures) {
  for (std::size_t i = 1; i < gestures.size(); ++i) {
    if (gestures[i].dims() != gestures[0].dims()) {
      throw DataError("gesture '" + gestures[i].id + "' has " +
                      std::to_string(gestures[i].dims()) + " dims, expected " +
                      std::to_string(gestures[0].dims()));
    }
    if (gestures[i].length() != gestures[0].length()) {
      throw DataError("gesture '" + gestures[i].id + "' has length " +
                      std::to_string(gestures[i].length()) + ", expected " +
                      std::to_string(gestures[0].length()));
    }
  }
}

}  // namespace

Dataset prepare_dataset(const std::vector<Gesture>& raw, int length, PrepareReport* report) {
  if (length < 2) throw UsageError("prepare length must be >= 2");
  PrepareReport local;
  Dataset d;
  for (const auto& g : raw) {
    try {
      Gesture cooked = normalize(resample(g, length));
      d.gestures.push_back(std::move(cooked));
    } catch (const DataError& e) {
      local.rejected.push_back({g.id, e.what()});
    }
  }
  if (d.gestures.empty()) {
    throw DataError("no usable gestures after preparation (" +
                    std::to_string(local.rejected.size()) + " rejected)");
  }
  check_uniform_shape(d.gestures);
  d.class_id_map = remap_classes(d.gestures);
  d.class_count = static_cast<int>(d.class_id_map.size());
  local.class_id_map = d.class_id_map;
  if (report) *report = std::move(local);
  return d;
}

namespace {

Gesture gesture_from_json(const ordered_json& rec, std::size_t line_no) {
  const auto fail = [line_no](const std::string& msg) -> DataError {
    return DataError("line " + std::to_string(line_no) + ": " + msg);
  };
  if (!rec.is_object()) throw fail("record is not a JSON object");
  for (const char* key : {"id", "class", "subject", "points"}) {
    if (!rec.contains(key)) throw fail(std::string("missing field '") + key + "'");
  }
  Gesture g;
  if (!rec["id"].is_string()) throw fail("'id' must be a string");
  g.id = rec["id"].get<std::string>();
  if (!rec["class"].is_number_integer()) throw fail("'class' must be an integer");
  g.class_id = rec["class"].get<int>();
  if (!rec["subject"].is_number_integer()) throw fail("'subject' must be an integer");
  g.subject_id = rec["subject"].get<int>();
  const auto& pts = rec["points"];
  if (!pts.is_array() || pts.empty()) throw fail("'points' must be a non-empty array");
  const std::size_t steps = pts.size();
  std::size_t dims = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& row = pts[t];
    if (!row.is_array() || row.empty()) throw fail("points rows must be non-empty arrays");
    if (t == 0) {
      dims = row.size();
      g.points.resize(static_cast<Eigen::Index>(dims), static_cast<Eigen::Index>(steps));
    } else if (row.size() != dims) {
      throw fail("points row " + std::to_string(t) + " has " + std::to_string(row.size()) +
                 " values, expected " + std::to_string(dims));
    }
    for (std::size_t n = 0; n < dims; ++n) {
      if (!row[n].is_number()) throw fail("points values must be numbers");
      g.points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t)) =
          row[n].get<double>();
    }
  }
  if (!all_finite(g.points)) throw fail("points contain non-finite values");
  return g;
}

ordered_json gesture_to_json(const Gesture& g) {
  ordered_json rec;
  rec["id"] = g.id;
  rec["class"] = g.class_id;
  rec["subject"] = g.subject_id;
  ordered_json pts = ordered_json::array();
  for (Eigen::Index t = 0; t < g.points.cols(); ++t) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index n = 0; n < g.points.rows(); ++n) row.push_back(g.points(n, t));
    pts.push_back(std::move(row));
  }
  rec["points"] = std::move(pts);
  return rec;
}

}  // namespace

std::vector<Gesture> load_gesture_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::vector<Gesture> gestures;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    gestures.push_back(gesture_from_json(rec, line_no));
  }
  if (gestures.empty()) throw DataError("dataset file has no records: " + path);
  return gestures;
}

Dataset load_dataset(const std::string& path) {
  Dataset d;
  d.gestures = load_gesture_records(path);
  check_uniform_shape(d.gestures);
  d.class_id_map = remap_classes(d.gestures);
  d.class_count = static_cast<int>(d.class_id_map.size());
  return d;
}

void save_gestures(const std::vector<Gesture>& gestures, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const auto& g : gestures) out << gesture_to_json(g).dump() << '\n';
  if (!out) throw DataError("failed while writing dataset file: " + path);
}

void save_dataset(const Dataset& d, const std::string& path) { save_gestures(d.gestures, path); }

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<Gesture> import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file: " + path);

  struct Row {
    double t;
    std::size_t order;  // file order, to keep equal-t rows stable
    Vector point;
  };
  struct Group {
    int class_id = 0;
    int subject_id = 0;
    std::vector<Row> rows;
  };
  std::vector<std::string> order;  // first-seen order of gesture ids
  std::map<std::string, Group> groups;

  std::string line;
  std::size_t line_no = 0;
  std::size_t row_count = 0;
  std::size_t dims = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_row(line);
    if (line_no == 1 && !cells.empty() && cells[0] == "id") continue;  // header row
    if (cells.size() < 6 || cells.size() > 7) {
      throw DataError("line " + std::to_string(line_no) +
                      ": expected id,class,subject,t,x,y[,z] (6 or 7 columns), got " +
                      std::to_string(cells.size()));
    }
    try {
      const std::string& id = cells[0];
      Group& grp = groups[id];
      if (grp.rows.empty()) {
        order.push_back(id);
        grp.class_id = std::stoi(cells[1]);
        grp.subject_id = std::stoi(cells[2]);
      }
      Row row;
      row.t = std::stod(cells[3]);
      row.order = row_count++;
      row.point.resize(static_cast<Eigen::Index>(cells.size()) - 4);
      for (std::size_t c = 4; c < cells.size(); ++c) {
        row.point(static_cast<Eigen::Index>(c - 4)) = std::stod(cells[c]);
      }
      if (dims == 0) dims = static_cast<std::size_t>(row.point.size());
      if (static_cast<std::size_t>(row.point.size()) != dims) {
        throw DataError("line " + std::to_string(line_no) + ": inconsistent coordinate count");
      }
      grp.rows.push_back(std::move(row));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(line_no) + ": unparsable numeric value");
    }
  }
  if (groups.empty()) throw DataError("csv file has no data rows: " + path);

  std::vector<Gesture> gestures;
  for (const auto& id : order) {
    Group& grp = groups[id];
    std::stable_sort(grp.rows.begin(), grp.rows.end(), [](const Row& a, const Row& b) {
      if (a.t != b.t) return a.t < b.t;
      return a.order < b.order;
    });
    Gesture g;
    g.id = id;
    g.class_id = grp.class_id;
    g.subject_id = grp.subject_id;
    g.points.resize(static_cast<Eigen::Index>(dims), static_cast<Eigen::Index>(grp.rows.size()));
    for (std::size_t i = 0; i < grp.rows.size(); ++i) {
      g.points.col(static_cast<Eigen::Index>(i)) = grp.rows[i].point;
    }
    gestures.push_back(std::move(g));
  }
  return gestures;
}

}  // namespace deepnag
