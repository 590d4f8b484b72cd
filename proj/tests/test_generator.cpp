#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "deepnag/generator.hpp"
#include "oracles.hpp"

using namespace deepnag;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "deepnag-test-generator";
  fs::create_directories(dir);
  return dir;
}

GruLayerParams random_layer(int hidden, int input, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 0.5);
  GruLayerParams p;
  const auto fill = [&](Matrix& m, int r, int c) {
    m.resize(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal(rng);
  };
  fill(p.w_update, hidden, input);
  fill(p.w_reset, hidden, input);
  fill(p.w_cand, hidden, input);
  fill(p.u_update, hidden, hidden);
  fill(p.u_reset, hidden, hidden);
  fill(p.u_cand, hidden, hidden);
  p.b_update = Vector::Zero(hidden);
  p.b_reset = Vector::Zero(hidden);
  p.b_cand = Vector::Zero(hidden);
  for (int i = 0; i < hidden; ++i) {
    p.b_update(i) = normal(rng);
    p.b_reset(i) = normal(rng);
    p.b_cand(i) = normal(rng);
  }
  return p;
}

GruLayerParams zero_layer(int hidden, int input) {
  GruLayerParams p;
  p.w_update = Matrix::Zero(hidden, input);
  p.w_reset = Matrix::Zero(hidden, input);
  p.w_cand = Matrix::Zero(hidden, input);
  p.u_update = Matrix::Zero(hidden, hidden);
  p.u_reset = Matrix::Zero(hidden, hidden);
  p.u_cand = Matrix::Zero(hidden, hidden);
  p.b_update = Vector::Zero(hidden);
  p.b_reset = Vector::Zero(hidden);
  p.b_cand = Vector::Zero(hidden);
  return p;
}

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

double max_param_diff(const GeneratorParams& a, const GeneratorParams& b) {
  const auto va = tensor_views(a);
  const auto vb = tensor_views(b);
  REQUIRE(va.size() == vb.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < va.size(); ++t) {
    REQUIRE(va[t].size == vb[t].size);
    for (std::size_t i = 0; i < va[t].size; ++i)
      worst = std::max(worst, std::abs(va[t].data[i] - vb[t].data[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("make_latent: shape, one-hot block, determinism") {
  Rng rng(3);
  const LatentSequence z = make_latent(2, 4, 10, 6, rng);
  REQUIRE(z.data.rows() == 10);
  REQUIRE(z.data.cols() == 10);
  CHECK(z.class_id == 2);
  CHECK(z.latent_dims == 6);
  CHECK(z.class_count == 4);
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 4; ++k) CHECK(z.data(6 + k, c) == (k == 2 ? 1.0 : 0.0));

  Rng r1(99), r2(99);
  const LatentSequence a = make_latent(0, 3, 8, 5, r1);
  const LatentSequence b = make_latent(0, 3, 8, 5, r2);
  CHECK((a.data - b.data).cwiseAbs().maxCoeff() == 0.0);

  Rng r3(7);
  CHECK_THROWS_AS(make_latent(3, 3, 8, 5, r3), UsageError);
  CHECK_THROWS_AS(make_latent(-1, 3, 8, 5, r3), UsageError);
}

TEST_CASE("make_latent: noise rows are roughly standard normal") {
  Rng rng(11);
  double sum = 0.0, sum_sq = 0.0;
  int n = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const LatentSequence z = make_latent(trial % 3, 3, 8, 4, rng);
    for (int c = 0; c < 8; ++c)
      for (int r = 0; r < 4; ++r) {
        const double v = z.data(r, c);
        sum += v;
        sum_sq += v * v;
        ++n;
      }
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) <= 0.05);
  CHECK(std::abs(var - 1.0) <= 0.1);
}

TEST_CASE("gru_cell_forward: zero parameters halve the state") {
  const GruLayerParams p = zero_layer(3, 2);
  Vector x(2), h(3);
  x << 0.7, -0.3;
  h << 1.0, -2.0, 0.5;
  const GruCellState s = gru_cell_forward(p, x, h);
  // sigmoid(0) = 0.5 update gate, candidate tanh(0) = 0.
  CHECK((s.hidden - 0.5 * h).cwiseAbs().maxCoeff() == 0.0);

  const GruCellState from_rest = gru_cell_forward(p, x, Vector::Zero(3));
  CHECK(from_rest.hidden.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru_cell_forward: matches the independent scalar cell") {
  Rng rng(17);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const int hidden = 2 + trial % 4, input = 1 + trial % 3;
    const GruLayerParams p = random_layer(hidden, input, rng);
    Vector x(input), h(hidden);
    for (int i = 0; i < input; ++i) x(i) = normal(rng);
    for (int i = 0; i < hidden; ++i) h(i) = normal(rng);
    const GruCellState s = gru_cell_forward(p, x, h);
    const std::vector<double> expect = oracle::gru_cell_scalar(p, to_std(x), to_std(h));
    REQUIRE(static_cast<int>(expect.size()) == hidden);
    for (int i = 0; i < hidden; ++i) CHECK(std::abs(s.hidden(i) - expect[i]) <= 1e-12);
  }
}

TEST_CASE("generator_forward: output range, determinism, class pass-through") {
  Rng rng(23);
  const GeneratorParams params = init_params({6, 5}, 7, 3, 41);
  const LatentSequence z = make_latent(1, 3, 12, 4, rng);  // 4 + 3 = 7 rows
  const GeneratorOutput out = generator_forward(params, z);
  REQUIRE(out.gesture.points.rows() == 3);
  REQUIRE(out.gesture.points.cols() == 12);
  CHECK(out.gesture.class_id == 1);
  CHECK(out.gesture.points.cwiseAbs().maxCoeff() < 1.0);

  const GeneratorOutput again = generator_forward(params, z);
  CHECK((out.gesture.points - again.gesture.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.gesture.points - generator_sample(params, z).points).cwiseAbs().maxCoeff() == 0.0);

  // Tape shapes line up with the stack.
  REQUIRE(out.tape.layers.size() == 2);
  CHECK(out.tape.layers[0].hidden.rows() == 6);
  CHECK(out.tape.layers[1].hidden.rows() == 5);
  CHECK(out.tape.output.cols() == 12);
}

TEST_CASE("generator_forward: zero stack exposes the output bias") {
  GeneratorParams params;
  params.layers.push_back(zero_layer(4, 5));
  params.w_out = Matrix::Zero(2, 4);
  params.b_out = Vector::Zero(2);
  params.b_out << 0.25, -1.5;
  Rng rng(29);
  const LatentSequence z = make_latent(0, 2, 6, 3, rng);  // 3 + 2 = 5 rows
  const GeneratorOutput out = generator_forward(params, z);
  for (int c = 0; c < 6; ++c) {
    CHECK(out.gesture.points(0, c) == doctest::Approx(std::tanh(0.25)).epsilon(1e-15));
    CHECK(out.gesture.points(1, c) == doctest::Approx(std::tanh(-1.5)).epsilon(1e-15));
  }
}

TEST_CASE("generator_forward: input size mismatch is a data error") {
  const GeneratorParams params = init_params({4}, 6, 2, 1);
  Rng rng(31);
  const LatentSequence z = make_latent(0, 2, 5, 3, rng);  // 5 rows, params expect 6
  CHECK_THROWS_AS(generator_forward(params, z), DataError);
}

TEST_CASE("generator_backward: matches finite differences over every parameter") {
  Rng rng(37);
  for (const std::vector<int>& widths :
       {std::vector<int>{4}, std::vector<int>{4, 3}, std::vector<int>{3, 4, 3}}) {
    GeneratorParams params = init_params(widths, 4, 2, 101);
    const LatentSequence z = make_latent(0, 2, 3, 2, rng);
    Matrix upstream(2, 3);
    std::normal_distribution<double> normal;
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 2; ++r) upstream(r, c) = normal(rng);

    const auto objective = [&] {
      const GeneratorOutput out = generator_forward(params, z);
      return (out.gesture.points.array() * upstream.array()).sum();
    };

    const GeneratorOutput out = generator_forward(params, z);
    const GeneratorParams grads = generator_backward(params, out.tape, upstream);

    oracle::GradCheck check;
    const auto grad_views = tensor_views(grads);
    const auto param_views = tensor_views(params);
    REQUIRE(grad_views.size() == param_views.size());
    for (std::size_t t = 0; t < param_views.size(); ++t)
      for (std::size_t i = 0; i < param_views[t].size; ++i) {
        const double fd = oracle::central_diff(&param_views[t].data[i], 1e-5, objective);
        check.account(grad_views[t].data[i], fd);
      }
    CHECK(check.relative() <= 1e-5);
  }
}

TEST_CASE("generator_backward: zero upstream and multi-layer flow") {
  const GeneratorParams params = init_params({4, 3}, 5, 2, 7);
  Rng rng(41);
  const LatentSequence z = make_latent(1, 2, 4, 3, rng);
  const GeneratorOutput out = generator_forward(params, z);

  const GeneratorParams zero_grads =
      generator_backward(params, out.tape, Matrix::Zero(2, 4));
  for (const auto& view : tensor_views(zero_grads))
    for (std::size_t i = 0; i < view.size; ++i) CHECK(view.data[i] == 0.0);

  const GeneratorParams grads = generator_backward(params, out.tape, Matrix::Ones(2, 4));
  // Gradient reaches the bottom layer of a two-layer stack.
  CHECK(grads.layers[0].w_update.cwiseAbs().maxCoeff() > 0.0);
  CHECK(grads.layers[0].w_cand.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("init_params: determinism, bounds, spread, zero biases") {
  const GeneratorParams a = init_params({8, 6}, 10, 3, 1234);
  const GeneratorParams b = init_params({8, 6}, 10, 3, 1234);
  CHECK(max_param_diff(a, b) == 0.0);
  const GeneratorParams c = init_params({8, 6}, 10, 3, 1235);
  CHECK(max_param_diff(a, c) > 0.0);

  CHECK(a.hidden_sizes() == std::vector<int>{8, 6});
  CHECK(a.input_size() == 10);
  CHECK(a.output_dims() == 3);

  CHECK(a.layers[0].b_update.cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.layers[0].b_reset.cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.layers[0].b_cand.cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.b_out.cwiseAbs().maxCoeff() == 0.0);

  // Uniform(-limit, limit) per matrix with limit = sqrt(6/(fan_in+fan_out)):
  // check the bound and that the sample variance is near limit^2 / 3.
  const GeneratorParams big = init_params({128}, 128, 2, 5);
  const Matrix& w = big.layers[0].w_update;
  const double limit = std::sqrt(6.0 / (128 + 128));
  CHECK(w.cwiseAbs().maxCoeff() <= limit);
  const double var = w.array().square().mean() - std::pow(w.array().mean(), 2.0);
  CHECK(var == doctest::Approx(limit * limit / 3.0).epsilon(0.2));
}

TEST_CASE("checkpoint: round trip preserves every field exactly") {
  Rng rng(43);
  Checkpoint c;
  c.params = init_params({5, 4}, 6, 2, 77);
  c.seed = 0xDEADBEEFCAFEBABEull;
  c.step = 12345;
  c.latent_dims = 4;
  c.class_count = 2;
  c.length = 16;
  c.adam_m = zeros_like(c.params);
  c.adam_v = zeros_like(c.params);
  std::normal_distribution<double> normal;
  for (auto& view : tensor_views(c.adam_m))
    for (std::size_t i = 0; i < view.size; ++i) view.data[i] = normal(rng);
  for (auto& view : tensor_views(c.adam_v))
    for (std::size_t i = 0; i < view.size; ++i) view.data[i] = std::abs(normal(rng));
  c.adam_t = 999;

  const fs::path path = test_dir() / "round-trip.nag";
  save_checkpoint(c, path.string());
  const Checkpoint back = load_checkpoint(path.string());

  CHECK(back.seed == c.seed);
  CHECK(back.step == c.step);
  CHECK(back.latent_dims == 4);
  CHECK(back.class_count == 2);
  CHECK(back.length == 16);
  CHECK(back.adam_t == 999);
  CHECK(max_param_diff(back.params, c.params) == 0.0);
  CHECK(max_param_diff(back.adam_m, c.adam_m) == 0.0);
  CHECK(max_param_diff(back.adam_v, c.adam_v) == 0.0);
  CHECK(back.input_size() == 6);
}

TEST_CASE("checkpoint: malformed files are rejected") {
  const fs::path dir = test_dir();
  Checkpoint c;
  c.params = init_params({3}, 4, 2, 7);
  c.adam_m = zeros_like(c.params);
  c.adam_v = zeros_like(c.params);
  c.latent_dims = 2;
  c.class_count = 2;
  c.length = 8;
  const fs::path good = dir / "good.nag";
  save_checkpoint(c, good.string());

  CHECK_THROWS_AS(load_checkpoint((dir / "missing.nag").string()), DataError);

  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  REQUIRE(bytes.size() > 16);

  {
    std::string bad = bytes;
    bad[0] = 'X';  // breaks the magic
    std::ofstream out(dir / "bad-magic.nag", std::ios::binary);
    out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "bad-magic.nag").string()), DataError);

  {
    std::ofstream out(dir / "truncated.nag", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "truncated.nag").string()), DataError);

  {
    std::string padded = bytes + std::string(8, '\0');
    std::ofstream out(dir / "padded.nag", std::ios::binary);
    out.write(padded.data(), static_cast<std::streamsize>(padded.size()));
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "padded.nag").string()), DataError);
}
