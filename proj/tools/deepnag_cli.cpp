// deepnag — command-line front end over the C API.
//
// Subcommands: prepare | train | generate | eval-augment | bench-sdtw |
// export-svg. Exit codes mirror nag_status: 0 success, 2 usage error,
// 3 data error, 4 numeric failure. Every failure prints exactly one
// "error: ..." line on stderr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deepnag.h"

using json = nlohmann::json;

namespace {

// Owns a string returned through a char** out-parameter.
struct CString {
  char* ptr = nullptr;
  ~CString() { nag_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

int fail(nag_status status) {
  std::cerr << "error: " << nag_last_error() << "\n";
  return static_cast<int>(status);
}

int fail_data(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return static_cast<int>(NAG_ERR_DATA);
}

bool read_file(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  *out = buf.str();
  return true;
}

// Every stochastic command takes --seed; when the flag is absent a seed
// is generated and printed so the run stays reproducible after the fact.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() > 0) return value;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cout << "seed: " << seed << " (generated; pass --seed " << seed << " to reproduce)\n";
  return seed;
}

void print_progress(const char* message, void*) { std::cout << message << "\n"; }

int run_prepare(const std::string& input, const std::string& format, int length,
                const std::string& output) {
  CString report;
  const nag_status st = nag_prepare(input.c_str(), format.c_str(), length, output.c_str(),
                                    &report.ptr);
  if (st != NAG_OK) return fail(st);
  const json rep = json::parse(report.str());
  std::cout << "prepared " << rep["gestures"] << " gestures (" << rep["dims"] << " dims, length "
            << rep["length"] << ") -> " << output << "\n";
  const auto& counts = rep["class_counts"];
  const auto& id_map = rep["class_id_map"];
  for (std::size_t c = 0; c < counts.size(); ++c)
    std::cout << "  class " << c << " (source id " << id_map[c] << "): " << counts[c]
              << " samples\n";
  for (const auto& r : rep["rejected"])
    std::cout << "  rejected " << r["id"].get<std::string>() << ": "
              << r["reason"].get<std::string>() << "\n";
  return 0;
}

int run_train(const std::string& dataset_path, const std::string& config_path,
              const std::string& out_dir, const std::string& resume, bool have_max_steps,
              int max_steps, bool have_seed, std::uint64_t seed) {
  std::string config_text = "{}";
  if (!config_path.empty() && !read_file(config_path, &config_text))
    return fail_data("cannot read config file: " + config_path);
  if (have_max_steps || have_seed) {
    // Fold flag overrides into the config; if the file doesn't parse,
    // pass it through so the library reports the canonical error.
    try {
      json j = json::parse(config_text);
      if (have_max_steps) j["max_steps"] = max_steps;
      if (have_seed) j["seed"] = seed;
      config_text = j.dump();
    } catch (const json::exception&) {
    }
  }

  nag_dataset* data = nullptr;
  nag_status st = nag_dataset_open(dataset_path.c_str(), &data);
  if (st != NAG_OK) return fail(st);

  CString summary;
  st = nag_train(data, config_text.c_str(), out_dir.c_str(),
                 resume.empty() ? nullptr : resume.c_str(), print_progress, nullptr,
                 &summary.ptr);
  nag_dataset_close(data);
  if (st != NAG_OK) return fail(st);

  const json s = json::parse(summary.str());
  std::cout << "trained steps " << s["start_step"] << ".." << s["final_step"] << "; best step "
            << s["best_step"] << " (loss " << s["best_loss"] << ")\n";
  std::cout << "  final checkpoint: " << s["final_checkpoint"].get<std::string>() << "\n";
  std::cout << "  best checkpoint:  " << s["best_checkpoint"].get<std::string>() << "\n";
  std::cout << "  log:              " << s["log"].get<std::string>() << "\n";
  return 0;
}

int run_generate(const std::string& checkpoint, int class_id, int count, std::uint64_t seed,
                 const std::string& output) {
  nag_model* model = nullptr;
  nag_status st = nag_model_open(checkpoint.c_str(), &model);
  if (st != NAG_OK) return fail(st);
  st = nag_model_generate(model, class_id, count, seed, output.c_str());
  nag_model_close(model);
  if (st != NAG_OK) return fail(st);
  std::cout << "wrote " << count << " class-" << class_id << " samples to " << output << "\n";
  return 0;
}

int run_eval(const std::string& dataset_path, const std::string& checkpoint,
             const json& options, const std::string& csv) {
  nag_dataset* data = nullptr;
  nag_status st = nag_dataset_open(dataset_path.c_str(), &data);
  if (st != NAG_OK) return fail(st);

  nag_model* model = nullptr;
  if (!checkpoint.empty()) {
    st = nag_model_open(checkpoint.c_str(), &model);
    if (st != NAG_OK) {
      nag_dataset_close(data);
      return fail(st);
    }
  }

  CString report;
  st = nag_eval_augment(data, model, options.dump().c_str(), csv.empty() ? nullptr : csv.c_str(),
                        &report.ptr);
  nag_model_close(model);
  nag_dataset_close(data);
  if (st != NAG_OK) return fail(st);

  const auto rep = nlohmann::ordered_json::parse(report.str());
  std::cout << rep["results_table"].get<std::string>() << "\n"
            << rep["score_table"].get<std::string>() << "\n";
  std::cout << "scores (json): " << rep["scores"].dump() << "\n";
  if (!csv.empty()) std::cout << "results csv: " << csv << "\n";
  return 0;
}

int run_bench(const json& options) {
  CString csv;
  const nag_status st = nag_bench_sdtw(options.dump().c_str(), &csv.ptr);
  if (st != NAG_OK) return fail(st);
  std::cout << csv.str();
  return 0;
}

int run_export_svg(const std::string& input, const std::string& output, int columns) {
  const nag_status st = nag_export_svg(input.c_str(), output.c_str(), columns);
  if (st != NAG_OK) return fail(st);
  std::cout << "wrote " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepnag: recurrent gesture generator (training, sampling, evaluation)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", []() { return std::string(nag_version()); });

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Resample + normalize raw gestures");
  std::string prep_input, prep_output, prep_format = "auto";
  int prep_length = 64;
  prepare->add_option("--input", prep_input, "Raw gesture file")->required();
  prepare->add_option("--format", prep_format, "Input format: auto|json|csv (default auto)")
      ->check(CLI::IsMember({"auto", "json", "csv"}));
  prepare->add_option("--length", prep_length, "Points per resampled gesture (default 64)");
  prepare->add_option("--output", prep_output, "Prepared JSON-lines dataset")->required();

  // train
  auto* train = app.add_subcommand("train", "Train the generator");
  std::string train_dataset, train_config, train_out, train_resume;
  int train_max_steps = 0;
  std::uint64_t train_seed = 0;
  train->add_option("--dataset", train_dataset, "Prepared dataset")->required();
  train->add_option("--config", train_config, "Training config JSON (defaults when omitted)");
  train->add_option("--out-dir", train_out, "Output directory (log, checkpoints)")->required();
  train->add_option("--resume", train_resume, "Checkpoint to resume from");
  auto* train_steps_opt =
      train->add_option("--max-steps", train_max_steps, "Override the config's max_steps");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "Override the config's seed");

  // generate
  auto* generate = app.add_subcommand("generate", "Sample gestures from a checkpoint");
  std::string gen_checkpoint, gen_output;
  int gen_class = 0, gen_count = 1;
  std::uint64_t gen_seed = 0;
  generate->add_option("--checkpoint", gen_checkpoint, "Trained checkpoint")->required();
  generate->add_option("--class", gen_class, "Class id to sample")->required();
  generate->add_option("--count", gen_count, "Samples to draw (default 1)");
  auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "Sampling seed");
  generate->add_option("--output", gen_output, "Output JSON-lines file")->required();

  // eval-augment
  auto* eval = app.add_subcommand("eval-augment", "Recognizer-based augmentation evaluation");
  std::string eval_dataset, eval_checkpoint, eval_name, eval_csv;
  std::vector<std::uint64_t> eval_seeds;
  std::vector<std::string> eval_augmenters;
  std::vector<double> eval_fractions;
  double eval_noise = 0.0, eval_ratio = 0.0;
  int eval_workers = 0;
  eval->add_option("--dataset", eval_dataset, "Prepared dataset")->required();
  eval->add_option("--checkpoint", eval_checkpoint,
                   "Trained checkpoint (required for the deepnag augmenter)");
  auto* eval_name_opt = eval->add_option("--name", eval_name, "Dataset name in reports");
  auto* eval_seeds_opt =
      eval->add_option("--seeds", eval_seeds, "Split seeds (default 1 2 3)")->delimiter(',');
  auto* eval_aug_opt = eval->add_option("--augmenters", eval_augmenters,
                                        "Augmenters to run (default baseline,noise,deepnag)")
                           ->delimiter(',');
  auto* eval_frac_opt = eval->add_option("--fractions", eval_fractions,
                                         "Train,validation,test fractions (default .5,.2,.3)")
                            ->delimiter(',')
                            ->expected(3);
  auto* eval_noise_opt =
      eval->add_option("--noise-magnitude", eval_noise, "Noise augmenter magnitude (default 0.02)");
  auto* eval_ratio_opt =
      eval->add_option("--synth-ratio", eval_ratio, "Synthetic per real sample (default 1.0)");
  auto* eval_workers_opt = eval->add_option("--workers", eval_workers, "Worker threads (0 = auto)");
  eval->add_option("--csv", eval_csv, "Write the results table as CSV");

  // bench-sdtw
  auto* bench = app.add_subcommand("bench-sdtw", "Benchmark the alignment kernel");
  int bench_batch = 64, bench_length = 64, bench_dims = 3, bench_workers = 0;
  std::uint64_t bench_seed = 42;
  double bench_gamma = 0.1;
  std::string bench_kind = "ed";
  auto* bb = bench->add_option("--batch", bench_batch, "Pairs per run (default 64)");
  auto* bl = bench->add_option("--length", bench_length, "Points per gesture (default 64)");
  auto* bd = bench->add_option("--dims", bench_dims, "Features per point (default 3)");
  auto* bw = bench->add_option("--workers", bench_workers, "Worker threads (0 = auto)");
  auto* bs = bench->add_option("--seed", bench_seed, "Batch seed (default 42)");
  auto* bg = bench->add_option("--gamma", bench_gamma, "Softmin temperature (default 0.1)");
  auto* bk = bench->add_option("--kind", bench_kind, "Cost kind: ed|cos (default ed)")
                 ->check(CLI::IsMember({"ed", "cos"}));

  // export-svg
  auto* svg = app.add_subcommand("export-svg", "Render a gesture file as an SVG grid");
  std::string svg_input, svg_output;
  int svg_columns = 8;
  svg->add_option("--input", svg_input, "JSON-lines gesture file")->required();
  svg->add_option("--output", svg_output, "SVG output path")->required();
  svg->add_option("--columns", svg_columns, "Grid columns (default 8)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(NAG_ERR_USAGE);
  }

  if (prepare->parsed()) return run_prepare(prep_input, prep_format, prep_length, prep_output);

  if (train->parsed())
    return run_train(train_dataset, train_config, train_out, train_resume,
                     train_steps_opt->count() > 0, train_max_steps, train_seed_opt->count() > 0,
                     train_seed);

  if (generate->parsed())
    return run_generate(gen_checkpoint, gen_class, gen_count,
                        resolve_seed(gen_seed_opt, gen_seed), gen_output);

  if (eval->parsed()) {
    // Only keys the user actually set go into the options object; the
    // library owns the defaults.
    json options = json::object();
    if (eval_name_opt->count()) options["dataset_name"] = eval_name;
    if (eval_seeds_opt->count()) options["seeds"] = eval_seeds;
    if (eval_aug_opt->count()) options["augmenters"] = eval_augmenters;
    if (eval_frac_opt->count()) options["fractions"] = eval_fractions;
    if (eval_noise_opt->count()) options["noise_magnitude"] = eval_noise;
    if (eval_ratio_opt->count()) options["synth_ratio"] = eval_ratio;
    if (eval_workers_opt->count()) options["workers"] = eval_workers;
    return run_eval(eval_dataset, eval_checkpoint, options, eval_csv);
  }

  if (bench->parsed()) {
    json options = json::object();
    if (bb->count()) options["batch"] = bench_batch;
    if (bl->count()) options["length"] = bench_length;
    if (bd->count()) options["dims"] = bench_dims;
    if (bw->count()) options["workers"] = bench_workers;
    if (bs->count()) options["seed"] = bench_seed;
    if (bg->count()) options["gamma"] = bench_gamma;
    if (bk->count()) options["kind"] = bench_kind;
    return run_bench(options);
  }

  if (svg->parsed()) return run_export_svg(svg_input, svg_output, svg_columns);

  std::cerr << "error: no subcommand\n";
  return static_cast<int>(NAG_ERR_USAGE);
}
