#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepnag/gesture.hpp"

namespace deepnag {

// Class-conditioned latent: a (latent_dims + class_count) x length
// matrix. The first latent_dims rows are i.i.d. standard normal draws
// per time step (drawn column by column); the remaining rows carry the
// one-hot class encoding repeated in every column.
struct LatentSequence {
  Matrix data;
  int class_id = 0;
  int latent_dims = 0;
  int class_count = 0;
};

LatentSequence make_latent(int class_id, int class_count, int length, int latent_dims, Rng& rng);

// One gated recurrent layer. Gate equations (the contract the tests
// check against an independent scalar implementation):
//   u_t = sigmoid(w_update x_t + u_update h_{t-1} + b_update)   update
//   r_t = sigmoid(w_reset  x_t + u_reset  h_{t-1} + b_reset)    reset
//   c_t = tanh   (w_cand   x_t + u_cand  (r_t .* h_{t-1}) + b_cand)
//   h_t = (1 - u_t) .* h_{t-1} + u_t .* c_t
// with h_0 = 0. All-zero parameters therefore give h_t = 0.5 * h_{t-1}.
struct GruLayerParams {
  Matrix w_update, w_reset, w_cand;  // hidden x input
  Matrix u_update, u_reset, u_cand;  // hidden x hidden
  Vector b_update, b_reset, b_cand;  // hidden

  int input_size() const { return static_cast<int>(w_update.cols()); }
  int hidden_size() const { return static_cast<int>(w_update.rows()); }
};

// Stacked recurrent decoder with an affine + tanh output head, so every
// generated coordinate lies in (-1, 1) like the normalized data.
struct GeneratorParams {
  std::vector<GruLayerParams> layers;
  Matrix w_out;  // dims x last hidden
  Vector b_out;  // dims

  int input_size() const { return layers.empty() ? 0 : layers.front().input_size(); }
  int output_dims() const { return static_cast<int>(w_out.rows()); }
  std::vector<int> hidden_sizes() const;
};

// Single-step cell evaluation; exposed for unit testing.
struct GruCellState {
  Vector update, reset, cand, hidden;
};
GruCellState gru_cell_forward(const GruLayerParams& p, const Vector& x, const Vector& h_prev);

// Everything backprop-through-time needs, recorded per layer and step.
struct ForwardTape {
  Matrix input;  // the latent (input_size x L)
  struct LayerTape {
    Matrix update, reset, cand, hidden;  // hidden_size x L each
  };
  std::vector<LayerTape> layers;
  Matrix output;  // dims x L tanh outputs
};

struct GeneratorOutput {
  Gesture gesture;
  ForwardTape tape;
};

// Runs the latent through the stack. The returned gesture carries the
// latent's class id. Throws NumericError if the output is non-finite
// and DataError on input/parameter size mismatches.
GeneratorOutput generator_forward(const GeneratorParams& params, const LatentSequence& z);

// Forward without recording a tape; used where no gradient may ever
// flow (the contrast half-batch, sampling after training).
Gesture generator_sample(const GeneratorParams& params, const LatentSequence& z);

// Backprop-through-time. upstream is d loss / d output (dims x L);
// returns parameter gradients in a GeneratorParams-shaped container.
GeneratorParams generator_backward(const GeneratorParams& params, const ForwardTape& tape,
                                   const Matrix& upstream);

// Xavier-uniform initialization, +-sqrt(6 / (fan_in + fan_out)) per
// weight matrix, zero biases. Deterministic under the seed.
GeneratorParams init_params(const std::vector<int>& hidden_sizes, int input_size, int output_dims,
                            std::uint64_t seed);

// Zero-filled gradient/moment container matching the parameter shapes.
GeneratorParams zeros_like(const GeneratorParams& params);

// Flat views over every tensor, in a fixed declared order; parameter,
// gradient and moment containers with equal shapes line up index-wise.
struct TensorView {
  double* data;
  std::size_t size;
};
std::vector<TensorView> tensor_views(GeneratorParams& params);

struct ConstTensorView {
  const double* data;
  std::size_t size;
};
std::vector<ConstTensorView> tensor_views(const GeneratorParams& params);

// A trained model snapshot: parameters plus the metadata needed to build
// latents for sampling, plus optimizer moments so training can resume
// bit-identically.
struct Checkpoint {
  GeneratorParams params;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  int latent_dims = 0;
  int class_count = 0;
  int length = 0;
  // Adam moments (same shapes as params) and the shared step count.
  GeneratorParams adam_m, adam_v;
  std::uint64_t adam_t = 0;

  int input_size() const { return latent_dims + class_count; }
};

// Versioned binary container (magic + version header, sizes, then raw
// little-endian doubles in row-major order). Loading rejects wrong
// magic or version and truncated files.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace deepnag
