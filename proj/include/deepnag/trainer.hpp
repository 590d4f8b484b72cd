#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deepnag/dataset.hpp"
#include "deepnag/generator.hpp"
#include "deepnag/loss.hpp"

namespace deepnag {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  int batch_size = 64;
  double gamma = 0.1;
  double alpha = 1e3;
  int max_steps = 0;
  std::uint64_t seed = 0;
  int latent_dims = 32;
  int length = 64;
  std::vector<int> hidden_sizes = {128, 256, 512};
  int checkpoint_every = 100;
  int workers = 0;  // 0 -> NAG_WORKERS / hardware default
};

// Returns every violated constraint (empty when valid), so callers can
// report all configuration problems at once.
std::vector<std::string> validate_config(const TrainConfig& cfg);

// JSON round-trip for config files and snapshots. Parsing rejects
// unknown keys and aggregates every validation issue into one
// UsageError.
TrainConfig config_from_json(const std::string& json_text);
std::string config_to_json(const TrainConfig& cfg);

struct AdamState {
  GeneratorParams m, v;
  std::uint64_t t = 0;
};

// One Adam update with bias correction:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
// Throws NumericError on non-finite gradients without touching any
// state.
void adam_step(GeneratorParams& params, const GeneratorParams& grads, AdamState& state,
               const TrainConfig& cfg);

// A quad plus the tapes of its gradient-receiving half-batch.
struct QuadBatch {
  BatchQuad quad;
  std::vector<LatentSequence> fake1_latents;   // aligned with quad.fake1
  std::vector<LatentSequence> fake2_latents;   // recorded; never backpropagated
  std::vector<ForwardTape> fake1_tapes;        // fake2 is sampled tape-free
};

// Builds one quad per sampled class. Accounting: with C classes sampled
// per step, each of the four sets gets batch_size / (2 C) members (the
// generated halves exactly; real halves are additionally capped at half
// the class's sample count so the two real halves stay disjoint).
// Classes with fewer than 2 samples are excluded with a warning. At
// most batch_size / 4 classes are sampled per step so every half-batch
// has at least 2 members; when more are eligible a seeded subset is
// drawn. Draw order per class: fake1 latents, fake2 latents, real
// shuffle — fixed so a step is reproducible from its RNG.
std::vector<QuadBatch> assemble_quads(const Dataset& train_data, const GeneratorParams& params,
                                      const TrainConfig& cfg, Rng& rng,
                                      std::vector<std::string>* warnings = nullptr);

struct StepRecord {
  std::uint64_t step = 0;
  LossBreakdown loss;  // mean over the step's quads
};

struct TrainHooks {
  // Called after every completed step.
  std::function<void(const StepRecord&)> on_step;
  // Called every checkpoint_every steps and once at the end.
  std::function<void(const Checkpoint&, bool is_final)> on_checkpoint;
  std::function<void(const std::string&)> on_warning;
};

struct TrainResult {
  Checkpoint final;                 // parameters after the last step
  GeneratorParams best_params;      // lowest-total-loss parameters seen
  std::uint64_t best_step = 0;
  double best_loss = 0.0;
  std::vector<StepRecord> history;  // one record per completed step
};

// Trains the generator on the given (already prepared) dataset. All
// stochastic draws are keyed on (seed, step), so resuming from a
// checkpoint replays the exact step stream a straight run would have
// produced. A non-finite loss or gradient aborts with NumericError; the
// last checkpoint written through the hooks remains valid.
TrainResult train(const Dataset& train_data, const TrainConfig& cfg,
                  const TrainHooks* hooks = nullptr, const Checkpoint* resume = nullptr);

// Samples `count` gestures of one class from a trained checkpoint.
// Deterministic under (seed, class_id); ids are "gen-c<class>-s<seed>-<k>"
// and subject_id is -1 to mark synthetic data.
std::vector<Gesture> generate(const Checkpoint& ckpt, int class_id, int count,
                              std::uint64_t seed);

}  // namespace deepnag
