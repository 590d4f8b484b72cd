#include "deepnag.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepnag/augment.hpp"
#include "deepnag/dataset.hpp"
#include "deepnag/generator.hpp"
#include "deepnag/sdtw.hpp"
#include "deepnag/svg.hpp"
#include "deepnag/trainer.hpp"

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Handle definitions: thin owning wrappers around the C++ types.
struct nag_dataset {
  deepnag::Dataset data;
};
struct nag_model {
  deepnag::Checkpoint ckpt;
};

namespace {

using namespace deepnag;

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs the body and maps the library's exception taxonomy onto status
// codes. Anything unexpected (filesystem, allocation) counts as a data
// error: the caller's environment, not its arguments, is at fault.
template <class F>
nag_status wrap(F&& body) {
  try {
    body();
    t_last_error.clear();
    return NAG_OK;
  } catch (const UsageError& e) {
    t_last_error = e.what();
    return NAG_ERR_USAGE;
  } catch (const NumericError& e) {
    t_last_error = e.what();
    return NAG_ERR_NUMERIC;
  } catch (const DataError& e) {
    t_last_error = e.what();
    return NAG_ERR_DATA;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return NAG_ERR_DATA;
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw UsageError(message);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<Gesture> load_raw(const std::string& path, const char* format) {
  std::string fmt = format ? format : "auto";
  if (fmt.empty() || fmt == "auto")
    fmt = fs::path(path).extension() == ".csv" ? "csv" : "json";
  if (fmt == "csv") return import_csv(path);
  if (fmt == "json") return load_gesture_records(path);
  throw UsageError("unknown input format '" + fmt + "' (expected json, csv, or auto)");
}

std::string checkpoint_name(std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt-%06llu.nag", static_cast<unsigned long long>(step));
  return buf;
}

// Keeps the three most recent rolling checkpoints (ckpt-<digits>.nag);
// ckpt-best.nag never matches the pattern and is never touched.
void prune_checkpoints(const fs::path& dir) {
  std::vector<std::pair<std::uint64_t, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= 9 || name.rfind("ckpt-", 0) != 0 || !name.ends_with(".nag")) continue;
    const std::string digits = name.substr(5, name.size() - 9);
    if (digits.find_first_not_of("0123456789") != std::string::npos) continue;
    found.emplace_back(std::stoull(digits), entry.path());
  }
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 3; i < found.size(); ++i) fs::remove(found[i].second);
}

struct BenchOptions {
  int batch = 64;
  int length = 64;
  int dims = 3;
  int workers = 0;
  std::uint64_t seed = 42;
  double gamma = 0.1;
  std::string kind = "ed";
};

// Shared option-object parsing: every problem (bad type, unknown key,
// violated constraint) is collected and reported in a single error.
class OptionParser {
 public:
  OptionParser(const char* text, const char* what) : what_(what) {
    if (!text || !*text) return;
    try {
      object_ = json::parse(text);
    } catch (const json::exception& e) {
      throw UsageError(std::string(what) + ": " + e.what());
    }
    if (!object_.is_object()) throw UsageError(std::string(what) + ": expected a JSON object");
  }

  template <class T>
  void take(const char* key, T& into) {
    auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      into = it->get<T>();
    } catch (const json::exception&) {
      issues_.push_back(std::string(key) + " has the wrong type");
    }
    object_.erase(it);
  }

  void note(const std::string& issue) { issues_.push_back(issue); }

  void finish() {
    for (const auto& item : object_.items()) issues_.push_back("unknown key '" + item.key() + "'");
    if (issues_.empty()) return;
    std::string msg = std::string(what_) + ":";
    for (const auto& issue : issues_) msg += "\n  - " + issue;
    throw UsageError(msg);
  }

 private:
  const char* what_;
  json object_ = json::object();
  std::vector<std::string> issues_;
};

EvalOptions parse_eval_options(const char* text) {
  EvalOptions opt;
  OptionParser p(text, "invalid eval options");
  p.take("dataset_name", opt.dataset_name);
  std::vector<double> fractions(opt.fractions.begin(), opt.fractions.end());
  p.take("fractions", fractions);
  if (fractions.size() != 3)
    p.note("fractions must have exactly 3 entries (train, validation, test)");
  else
    std::copy(fractions.begin(), fractions.end(), opt.fractions.begin());
  p.take("seeds", opt.seeds);
  p.take("augmenters", opt.augmenters);
  p.take("noise_magnitude", opt.noise_magnitude);
  p.take("synth_ratio", opt.synth_ratio);
  p.take("workers", opt.workers);
  p.finish();
  return opt;
}

BenchOptions parse_bench_options(const char* text) {
  BenchOptions opt;
  OptionParser p(text, "invalid bench options");
  p.take("batch", opt.batch);
  p.take("length", opt.length);
  p.take("dims", opt.dims);
  p.take("workers", opt.workers);
  p.take("seed", opt.seed);
  p.take("gamma", opt.gamma);
  p.take("kind", opt.kind);
  if (opt.batch < 1) p.note("batch must be >= 1");
  if (opt.length < 2) p.note("length must be >= 2");
  if (opt.dims < 1) p.note("dims must be >= 1");
  if (opt.workers < 0) p.note("workers must be >= 0");
  if (!(opt.gamma > 0.0)) p.note("gamma must be > 0");
  if (opt.kind != "ed" && opt.kind != "cos") p.note("kind must be \"ed\" or \"cos\"");
  p.finish();
  return opt;
}

void set_out(char** out, const std::string& value) {
  if (out) *out = dup_string(value);
}

}  // namespace

const char* nag_version(void) { return "1.0.0"; }

const char* nag_last_error(void) { return t_last_error.c_str(); }

void nag_string_free(char* str) { std::free(str); }

nag_status nag_prepare(const char* input_path, const char* format, int length,
                       const char* output_path, char** report_json_out) {
  return wrap([&] {
    require(input_path, "nag_prepare: input_path is NULL");
    require(output_path, "nag_prepare: output_path is NULL");
    const std::vector<Gesture> raw = load_raw(input_path, format);
    PrepareReport report;
    const Dataset prepared = prepare_dataset(raw, length, &report);
    save_dataset(prepared, output_path);

    ordered_json rep;
    rep["gestures"] = prepared.gestures.size();
    rep["classes"] = prepared.class_count;
    rep["dims"] = prepared.dims();
    rep["length"] = prepared.length();
    rep["class_counts"] = prepared.class_counts();
    rep["class_id_map"] = prepared.class_id_map;
    ordered_json rejected = ordered_json::array();
    for (const PrepareIssue& issue : report.rejected)
      rejected.push_back({{"id", issue.id}, {"reason", issue.reason}});
    rep["rejected"] = rejected;
    set_out(report_json_out, rep.dump());
  });
}

nag_status nag_dataset_open(const char* path, nag_dataset** out) {
  return wrap([&] {
    require(path, "nag_dataset_open: path is NULL");
    require(out, "nag_dataset_open: out is NULL");
    auto handle = std::make_unique<nag_dataset>();
    handle->data = load_dataset(path);
    *out = handle.release();
  });
}

nag_status nag_dataset_info(const nag_dataset* dataset, char** json_out) {
  return wrap([&] {
    require(dataset, "nag_dataset_info: dataset is NULL");
    require(json_out, "nag_dataset_info: json_out is NULL");
    ordered_json info;
    info["gestures"] = dataset->data.gestures.size();
    info["classes"] = dataset->data.class_count;
    info["dims"] = dataset->data.dims();
    info["length"] = dataset->data.length();
    info["subjects"] = dataset->data.subject_ids();
    info["class_counts"] = dataset->data.class_counts();
    set_out(json_out, info.dump());
  });
}

void nag_dataset_close(nag_dataset* dataset) { delete dataset; }

nag_status nag_train(const nag_dataset* dataset, const char* config_json, const char* out_dir,
                     const char* resume_checkpoint, nag_log_fn log_fn, void* log_user,
                     char** summary_json_out) {
  return wrap([&] {
    require(dataset, "nag_train: dataset is NULL");
    require(out_dir, "nag_train: out_dir is NULL");
    const TrainConfig cfg = config_from_json(config_json && *config_json ? config_json : "{}");

    std::optional<Checkpoint> resume;
    if (resume_checkpoint) resume = load_checkpoint(resume_checkpoint);

    const fs::path dir(out_dir);
    fs::create_directories(dir);

    {
      std::ofstream snap(dir / "config.json");
      if (!snap) throw DataError("cannot write " + (dir / "config.json").string());
      snap << config_to_json(cfg) << '\n';
    }

    // Appending on resume makes an interrupted-then-resumed run produce
    // the same log bytes as an uninterrupted one.
    std::ofstream log(dir / "train-log.jsonl",
                      resume ? std::ios::out | std::ios::app : std::ios::out | std::ios::trunc);
    if (!log) throw DataError("cannot write " + (dir / "train-log.jsonl").string());

    auto emit = [&](const std::string& message) {
      if (log_fn) log_fn(message.c_str(), log_user);
    };

    std::vector<std::string> warnings;
    std::set<std::uint64_t> steps_on_disk;
    const int progress_every = std::max(1, cfg.checkpoint_every);

    TrainHooks hooks;
    hooks.on_step = [&](const StepRecord& r) {
      ordered_json line;
      line["step"] = r.step;
      line["ed"] = r.loss.ed_total();
      line["cos"] = r.loss.cos_total();
      line["resample"] = r.loss.alpha * r.loss.resample;
      line["total"] = r.loss.total();
      log << line.dump() << '\n';
      log.flush();
      if (r.step == 1 || r.step % static_cast<std::uint64_t>(progress_every) == 0)
        emit("step " + std::to_string(r.step) + "/" + std::to_string(cfg.max_steps) +
             " total=" + fmt_double(r.loss.total()));
    };
    hooks.on_checkpoint = [&](const Checkpoint& c, bool is_final) {
      const fs::path path = dir / checkpoint_name(c.step);
      save_checkpoint(c, path.string());
      steps_on_disk.insert(c.step);
      prune_checkpoints(dir);
      emit(std::string("checkpoint ") + path.filename().string() + (is_final ? " (final)" : ""));
    };
    hooks.on_warning = [&](const std::string& w) {
      warnings.push_back(w);
      emit("warning: " + w);
    };

    const TrainResult result = train(dataset->data, cfg, &hooks, resume ? &*resume : nullptr);

    // max_steps == 0 (or a resume already past the end) never reaches the
    // checkpoint hook; persist the final state explicitly.
    if (!steps_on_disk.count(result.final.step))
      save_checkpoint(result.final, (dir / checkpoint_name(result.final.step)).string());

    Checkpoint best;
    best.params = result.best_params;
    best.adam_m = zeros_like(result.best_params);
    best.adam_v = zeros_like(result.best_params);
    best.adam_t = 0;
    best.seed = cfg.seed;
    best.step = result.best_step;
    best.latent_dims = cfg.latent_dims;
    best.class_count = dataset->data.class_count;
    best.length = cfg.length;
    save_checkpoint(best, (dir / "ckpt-best.nag").string());

    ordered_json summary;
    summary["start_step"] = resume ? resume->step : 0;
    summary["final_step"] = result.final.step;
    summary["best_step"] = result.best_step;
    summary["best_loss"] = result.best_loss;
    if (result.history.empty())
      summary["final_loss"] = nullptr;
    else
      summary["final_loss"] = result.history.back().loss.total();
    summary["final_checkpoint"] = (dir / checkpoint_name(result.final.step)).string();
    summary["best_checkpoint"] = (dir / "ckpt-best.nag").string();
    summary["log"] = (dir / "train-log.jsonl").string();
    summary["warnings"] = warnings;
    set_out(summary_json_out, summary.dump());
  });
}

nag_status nag_model_open(const char* checkpoint_path, nag_model** out) {
  return wrap([&] {
    require(checkpoint_path, "nag_model_open: checkpoint_path is NULL");
    require(out, "nag_model_open: out is NULL");
    auto handle = std::make_unique<nag_model>();
    handle->ckpt = load_checkpoint(checkpoint_path);
    *out = handle.release();
  });
}

nag_status nag_model_info(const nag_model* model, char** json_out) {
  return wrap([&] {
    require(model, "nag_model_info: model is NULL");
    require(json_out, "nag_model_info: json_out is NULL");
    ordered_json info;
    info["step"] = model->ckpt.step;
    info["seed"] = model->ckpt.seed;
    info["latent_dims"] = model->ckpt.latent_dims;
    info["classes"] = model->ckpt.class_count;
    info["dims"] = model->ckpt.params.output_dims();
    info["length"] = model->ckpt.length;
    info["hidden_sizes"] = model->ckpt.params.hidden_sizes();
    set_out(json_out, info.dump());
  });
}

nag_status nag_model_generate(const nag_model* model, int class_id, int count, uint64_t seed,
                              const char* output_path) {
  return wrap([&] {
    require(model, "nag_model_generate: model is NULL");
    require(output_path, "nag_model_generate: output_path is NULL");
    require(count >= 1, "nag_model_generate: count must be >= 1");
    if (class_id < 0 || class_id >= model->ckpt.class_count)
      throw UsageError("unknown class " + std::to_string(class_id) + " (checkpoint has classes 0.." +
                       std::to_string(model->ckpt.class_count - 1) + ")");
    save_gestures(generate(model->ckpt, class_id, count, seed), output_path);
  });
}

void nag_model_close(nag_model* model) { delete model; }

nag_status nag_eval_augment(const nag_dataset* dataset, const nag_model* model,
                            const char* options_json, const char* csv_path,
                            char** report_json_out) {
  return wrap([&] {
    require(dataset, "nag_eval_augment: dataset is NULL");
    const EvalOptions opt = parse_eval_options(options_json);
    const std::vector<ExperimentResult> results =
        run_experiment(dataset->data, opt, model ? &model->ckpt : nullptr);
    const ScoreTable scores = score_generators(results);
    if (csv_path) write_results_csv(results, csv_path);

    ordered_json rep;
    ordered_json rows = ordered_json::array();
    for (const ExperimentResult& r : results)
      rows.push_back({{"dataset", r.dataset},
                      {"recognizer", r.recognizer},
                      {"augmenter", r.augmenter},
                      {"seed", r.seed},
                      {"error", r.error},
                      {"n_train_real", r.n_train_real},
                      {"n_train_synth", r.n_train_synth}});
    rep["results"] = rows;
    ordered_json score;
    score["groups"] = scores.groups;
    ordered_json score_rows = ordered_json::array();
    for (const ScoreRow& r : scores.rows)
      score_rows.push_back(
          {{"augmenter", r.augmenter}, {"score", r.score}, {"wins", r.wins}, {"ties", r.ties}});
    score["rows"] = score_rows;
    rep["scores"] = score;
    rep["results_table"] = format_results_table(results);
    rep["score_table"] = format_score_table(scores);
    set_out(report_json_out, rep.dump());
  });
}

nag_status nag_bench_sdtw(const char* options_json, char** csv_out) {
  return wrap([&] {
    require(csv_out, "nag_bench_sdtw: csv_out is NULL");
    const BenchOptions opt = parse_bench_options(options_json);
    const CostKind kind = opt.kind == "cos" ? CostKind::COS : CostKind::ED;

    // One shared random batch; both modes see the exact same inputs.
    Rng rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Gesture> gestures(2 * static_cast<std::size_t>(opt.batch));
    for (std::size_t g = 0; g < gestures.size(); ++g) {
      gestures[g].points.resize(opt.dims, opt.length);
      for (int t = 0; t < opt.length; ++t)
        for (int n = 0; n < opt.dims; ++n) gestures[g].points(n, t) = normal(rng);
    }
    std::vector<GesturePair> pairs;
    pairs.reserve(opt.batch);
    for (int i = 0; i < opt.batch; ++i)
      pairs.emplace_back(&gestures[2 * i], &gestures[2 * i + 1]);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const std::vector<SdtwPairResult> serial = sdtw_batch(pairs, kind, opt.gamma, false);
    const auto t1 = clock::now();
    ThreadPool pool(opt.workers);
    const auto t2 = clock::now();
    const std::vector<SdtwPairResult> parallel = sdtw_batch(pairs, kind, opt.gamma, true, &pool);
    const auto t3 = clock::now();

    // Correctness gate: no timings unless both modes agree elementwise.
    for (std::size_t i = 0; i < serial.size(); ++i) {
      const double value_diff = std::abs(serial[i].value - parallel[i].value);
      const double grad_diff =
          (serial[i].d_points - parallel[i].d_points).cwiseAbs().maxCoeff();
      if (!(value_diff <= 1e-10) || !(grad_diff <= 1e-10))
        throw NumericError("serial/parallel disagreement at pair " + std::to_string(i) +
                           " (value diff " + fmt_double(value_diff) + ", gradient diff " +
                           fmt_double(grad_diff) + ")");
    }

    auto row = [&](const char* mode, int workers, double wall_ms) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%s,%d,%.3f,%.1f\n", opt.batch, opt.length, opt.dims,
                    mode, workers, wall_ms, wall_ms > 0.0 ? 1000.0 * opt.batch / wall_ms : 0.0);
      return std::string(buf);
    };
    const double serial_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double parallel_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();
    std::string csv = "batch,length,dims,mode,workers,wall_ms,pairs_per_sec\n";
    csv += row("serial", 1, serial_ms);
    csv += row("parallel", pool.size(), parallel_ms);
    set_out(csv_out, csv);
  });
}

nag_status nag_export_svg(const char* input_path, const char* output_path, int columns) {
  return wrap([&] {
    require(input_path, "nag_export_svg: input_path is NULL");
    require(output_path, "nag_export_svg: output_path is NULL");
    export_svg(load_gesture_records(input_path), output_path, columns);
  });
}
