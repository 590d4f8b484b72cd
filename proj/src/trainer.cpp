#include "deepnag/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deepnag/parallel.hpp"

namespace deepnag {

namespace {

// Salts for deriving independent RNG sub-streams from the config seed.
constexpr std::uint64_t kInitSalt = 0x1111;
constexpr std::uint64_t kStepSalt = 0x2222;

}  // namespace

std::vector<std::string> validate_config(const TrainConfig& cfg) {
  std::vector<std::string> issues;
  if (!(cfg.learning_rate > 0.0)) issues.push_back("learning_rate must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) issues.push_back("beta1 must be in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) issues.push_back("beta2 must be in [0, 1)");
  if (!(cfg.epsilon > 0.0)) issues.push_back("epsilon must be positive");
  if (cfg.batch_size < 4) issues.push_back("batch_size must be >= 4");
  if (cfg.batch_size % 2 != 0) issues.push_back("batch_size must be even");
  if (!(cfg.gamma > 0.0)) issues.push_back("gamma must be positive");
  if (!(cfg.alpha >= 0.0)) issues.push_back("alpha must be non-negative");
  if (cfg.max_steps < 0) issues.push_back("max_steps must be >= 0");
  if (cfg.latent_dims < 1) issues.push_back("latent_dims must be >= 1");
  if (cfg.length < 2) issues.push_back("length must be >= 2");
  if (cfg.hidden_sizes.empty()) issues.push_back("hidden_sizes must not be empty");
  for (int h : cfg.hidden_sizes) {
    if (h < 1) {
      issues.push_back("hidden_sizes entries must be >= 1");
      break;
    }
  }
  if (cfg.checkpoint_every < 1) issues.push_back("checkpoint_every must be >= 1");
  if (cfg.workers < 0) issues.push_back("workers must be >= 0");
  return issues;
}

TrainConfig config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");

  TrainConfig cfg;
  std::vector<std::string> issues;
  const auto take = [&](const char* key, auto& value) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(value);
    } catch (const nlohmann::json::exception&) {
      issues.push_back(std::string("field '") + key + "' has the wrong type");
    }
    j.erase(key);
  };
  take("learning_rate", cfg.learning_rate);
  take("beta1", cfg.beta1);
  take("beta2", cfg.beta2);
  take("epsilon", cfg.epsilon);
  take("batch_size", cfg.batch_size);
  take("gamma", cfg.gamma);
  take("alpha", cfg.alpha);
  take("max_steps", cfg.max_steps);
  take("seed", cfg.seed);
  take("latent_dims", cfg.latent_dims);
  take("length", cfg.length);
  take("hidden_sizes", cfg.hidden_sizes);
  take("checkpoint_every", cfg.checkpoint_every);
  take("workers", cfg.workers);
  for (const auto& item : j.items()) {
    issues.push_back("unknown config field '" + item.key() + "'");
  }
  for (const auto& issue : validate_config(cfg)) issues.push_back(issue);
  if (!issues.empty()) {
    std::string joined = "invalid config:";
    for (const auto& issue : issues) joined += "\n  - " + issue;
    throw UsageError(joined);
  }
  return cfg;
}

std::string config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["learning_rate"] = cfg.learning_rate;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["batch_size"] = cfg.batch_size;
  j["gamma"] = cfg.gamma;
  j["alpha"] = cfg.alpha;
  j["max_steps"] = cfg.max_steps;
  j["seed"] = cfg.seed;
  j["latent_dims"] = cfg.latent_dims;
  j["length"] = cfg.length;
  j["hidden_sizes"] = cfg.hidden_sizes;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["workers"] = cfg.workers;
  return j.dump(2);
}

void adam_step(GeneratorParams& params, const GeneratorParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  const auto g_views = tensor_views(grads);
  for (const auto& view : g_views) {
    for (std::size_t i = 0; i < view.size; ++i) {
      if (!std::isfinite(view.data[i])) {
        throw NumericError("adam_step: non-finite gradient; step aborted");
      }
    }
  }

  const auto p_views = tensor_views(params);
  const auto m_views = tensor_views(state.m);
  const auto v_views = tensor_views(state.v);
  if (p_views.size() != g_views.size() || p_views.size() != m_views.size() ||
      p_views.size() != v_views.size()) {
    throw DataError("adam_step: parameter/gradient shape mismatch");
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < p_views.size(); ++k) {
    if (p_views[k].size != g_views[k].size) {
      throw DataError("adam_step: parameter/gradient shape mismatch");
    }
    double* p = p_views[k].data;
    const double* g = g_views[k].data;
    double* m = m_views[k].data;
    double* v = v_views[k].data;
    for (std::size_t i = 0; i < p_views[k].size; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

std::vector<QuadBatch> assemble_quads(const Dataset& train_data, const GeneratorParams& params,
                                      const TrainConfig& cfg, Rng& rng,
                                      std::vector<std::string>* warnings) {
  if (train_data.class_count < 1) throw DataError("assemble_quads: dataset has no classes");

  // Class id -> indices of that class's samples.
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(train_data.class_count));
  for (std::size_t i = 0; i < train_data.gestures.size(); ++i) {
    by_class[static_cast<std::size_t>(train_data.gestures[i].class_id)].push_back(i);
  }

  std::vector<int> eligible;
  for (int c = 0; c < train_data.class_count; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() >= 2) {
      eligible.push_back(c);
    } else if (warnings) {
      warnings->push_back("class " + std::to_string(c) + " has fewer than 2 samples; excluded");
    }
  }
  if (eligible.empty()) throw DataError("assemble_quads: no class has at least 2 samples");

  // batch_size counts generated samples per step: C quads of two
  // generated half-batches each, so each half gets batch/(2C). At most
  // batch/4 classes keeps the halves at >= 2 members.
  const int max_classes = std::max(1, cfg.batch_size / 4);
  const int n_classes = std::min<int>(static_cast<int>(eligible.size()), max_classes);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::vector<int> picked(eligible.begin(), eligible.begin() + n_classes);
  std::sort(picked.begin(), picked.end());
  const int half = std::max(1, cfg.batch_size / (2 * n_classes));

  std::vector<QuadBatch> quads;
  quads.reserve(picked.size());
  for (int c : picked) {
    QuadBatch qb;
    qb.quad.class_id = c;
    for (int k = 0; k < half; ++k) {
      qb.fake1_latents.push_back(
          make_latent(c, train_data.class_count, cfg.length, cfg.latent_dims, rng));
    }
    for (int k = 0; k < half; ++k) {
      qb.fake2_latents.push_back(
          make_latent(c, train_data.class_count, cfg.length, cfg.latent_dims, rng));
    }
    for (const auto& z : qb.fake1_latents) {
      GeneratorOutput out = generator_forward(params, z);
      qb.quad.fake1.push_back(std::move(out.gesture));
      qb.fake1_tapes.push_back(std::move(out.tape));
    }
    for (const auto& z : qb.fake2_latents) {
      qb.quad.fake2.push_back(generator_sample(params, z));  // constant: no tape, no gradient
    }

    auto indices = by_class[static_cast<std::size_t>(c)];
    std::shuffle(indices.begin(), indices.end(), rng);
    const int real_half =
        std::min<int>(half, static_cast<int>(indices.size()) / 2);  // disjoint halves
    for (int k = 0; k < real_half; ++k) {
      qb.quad.real1.push_back(train_data.gestures[indices[static_cast<std::size_t>(k)]]);
      qb.quad.real2.push_back(
          train_data.gestures[indices[static_cast<std::size_t>(real_half + k)]]);
    }
    quads.push_back(std::move(qb));
  }
  return quads;
}

namespace {

void accumulate(GeneratorParams& into, const GeneratorParams& from, double scale) {
  const auto dst = tensor_views(into);
  const auto src = tensor_views(from);
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t i = 0; i < dst[k].size; ++i) dst[k].data[i] += scale * src[k].data[i];
  }
}

void add_breakdown(LossBreakdown& into, const LossBreakdown& from) {
  into.ed_similarity += from.ed_similarity;
  into.ed_variation += from.ed_variation;
  into.cos_similarity += from.cos_similarity;
  into.cos_variation += from.cos_variation;
  into.resample += from.resample;
}

void scale_breakdown(LossBreakdown& b, double s) {
  b.ed_similarity *= s;
  b.ed_variation *= s;
  b.cos_similarity *= s;
  b.cos_variation *= s;
  b.resample *= s;
}

Checkpoint make_checkpoint(const GeneratorParams& params, const AdamState& adam,
                           const TrainConfig& cfg, int class_count, std::uint64_t step) {
  Checkpoint c;
  c.params = params;
  c.adam_m = adam.m;
  c.adam_v = adam.v;
  c.adam_t = adam.t;
  c.seed = cfg.seed;
  c.step = step;
  c.latent_dims = cfg.latent_dims;
  c.class_count = class_count;
  c.length = cfg.length;
  return c;
}

}  // namespace

TrainResult train(const Dataset& train_data, const TrainConfig& cfg, const TrainHooks* hooks,
                  const Checkpoint* resume) {
  {
    const auto issues = validate_config(cfg);
    if (!issues.empty()) {
      std::string joined = "invalid config:";
      for (const auto& issue : issues) joined += "\n  - " + issue;
      throw UsageError(joined);
    }
  }
  if (train_data.gestures.empty()) throw DataError("train: dataset is empty");
  if (train_data.length() != cfg.length) {
    throw DataError("train: dataset length " + std::to_string(train_data.length()) +
                    " does not match config length " + std::to_string(cfg.length));
  }

  GeneratorParams params;
  AdamState adam;
  std::uint64_t start_step = 0;
  if (resume) {
    if (resume->latent_dims != cfg.latent_dims || resume->length != cfg.length ||
        resume->class_count != train_data.class_count ||
        resume->params.output_dims() != train_data.dims() ||
        resume->params.hidden_sizes() != cfg.hidden_sizes) {
      throw DataError("train: checkpoint does not match config/dataset shapes");
    }
    params = resume->params;
    adam.m = resume->adam_m;
    adam.v = resume->adam_v;
    adam.t = resume->adam_t;
    start_step = resume->step;
  } else {
    params = init_params(cfg.hidden_sizes, cfg.latent_dims + train_data.class_count,
                         train_data.dims(), mix_seed(cfg.seed, kInitSalt));
    adam.m = zeros_like(params);
    adam.v = zeros_like(params);
  }

  ThreadPool pool(cfg.workers);

  TrainResult result;
  result.best_params = params;
  result.best_step = start_step;
  result.best_loss = std::numeric_limits<double>::infinity();

  bool warned = false;
  for (std::uint64_t step = start_step + 1; step <= static_cast<std::uint64_t>(cfg.max_steps);
       ++step) {
    // Every draw of this step comes from one step-keyed engine, so a
    // resumed run replays the identical stream.
    Rng rng(mix_seed(mix_seed(cfg.seed, kStepSalt), step));
    std::vector<std::string> warnings;
    auto quads = assemble_quads(train_data, params, cfg, rng, &warnings);
    if (!warned && hooks && hooks->on_warning) {
      for (const auto& w : warnings) hooks->on_warning(w);
      warned = true;
    }

    GeneratorParams total_grads = zeros_like(params);
    LossBreakdown step_loss;
    step_loss.alpha = cfg.alpha;
    const double inv_quads = 1.0 / static_cast<double>(quads.size());
    for (auto& qb : quads) {
      QuadGradient qg = deepnag_gradient(qb.quad, cfg.gamma, cfg.alpha, &pool);
      add_breakdown(step_loss, qg.loss);

      // Backprop each fake1 member, then reduce in index order so the
      // result does not depend on worker scheduling.
      std::vector<GeneratorParams> member_grads(qb.quad.fake1.size());
      pool.parallel_for(qb.quad.fake1.size(), [&](std::size_t i) {
        member_grads[i] = generator_backward(params, qb.fake1_tapes[i], qg.d_fake1[i]);
      });
      for (const auto& mg : member_grads) accumulate(total_grads, mg, inv_quads);
    }
    scale_breakdown(step_loss, inv_quads);

    if (!std::isfinite(step_loss.total())) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                         "; last checkpoint retained");
    }
    adam_step(params, total_grads, adam, cfg);

    StepRecord record{step, step_loss};
    result.history.push_back(record);
    if (hooks && hooks->on_step) hooks->on_step(record);

    if (step_loss.total() < result.best_loss) {
      result.best_loss = step_loss.total();
      result.best_params = params;
      result.best_step = step;
    }

    const bool last = step == static_cast<std::uint64_t>(cfg.max_steps);
    if (hooks && hooks->on_checkpoint &&
        (step % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0 || last)) {
      hooks->on_checkpoint(make_checkpoint(params, adam, cfg, train_data.class_count, step), last);
    }
  }

  result.final = make_checkpoint(params, adam, cfg, train_data.class_count,
                                 std::max<std::uint64_t>(start_step,
                                                         static_cast<std::uint64_t>(cfg.max_steps)));
  if (!std::isfinite(result.best_loss)) {
    // max_steps == 0 (or resumed past the end): nothing ran, best is the
    // starting state.
    result.best_loss = 0.0;
    result.best_params = params;
  }
  return result;
}

std::vector<Gesture> generate(const Checkpoint& ckpt, int class_id, int count,
                              std::uint64_t seed) {
  if (count < 0) throw UsageError("generate: count must be >= 0");
  if (class_id < 0 || class_id >= ckpt.class_count) {
    throw UsageError("generate: class_id " + std::to_string(class_id) + " out of range [0, " +
                     std::to_string(ckpt.class_count) + ")");
  }
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(class_id)));
  std::vector<Gesture> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const LatentSequence z =
        make_latent(class_id, ckpt.class_count, ckpt.length, ckpt.latent_dims, rng);
    Gesture g = generator_sample(ckpt.params, z);
    g.subject_id = -1;
    g.id = "gen-c" + std::to_string(class_id) + "-s" + std::to_string(seed) + "-" +
           std::to_string(k);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace deepnag
