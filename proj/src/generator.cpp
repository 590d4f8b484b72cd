#include "deepnag/generator.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace deepnag {

namespace {

inline Vector sigmoid(const Vector& v) {
  return v.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

void check_layer(const GruLayerParams& p, const char* where) {
  const auto h = p.w_update.rows();
  const auto in = p.w_update.cols();
  const bool ok = p.w_reset.rows() == h && p.w_cand.rows() == h && p.w_reset.cols() == in &&
                  p.w_cand.cols() == in && p.u_update.rows() == h && p.u_update.cols() == h &&
                  p.u_reset.rows() == h && p.u_reset.cols() == h && p.u_cand.rows() == h &&
                  p.u_cand.cols() == h && p.b_update.size() == h && p.b_reset.size() == h &&
                  p.b_cand.size() == h;
  if (!ok) throw DataError(std::string(where) + ": inconsistent recurrent layer shapes");
}

}  // namespace

std::vector<int> GeneratorParams::hidden_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(layers.size());
  for (const auto& l : layers) sizes.push_back(l.hidden_size());
  return sizes;
}

LatentSequence make_latent(int class_id, int class_count, int length, int latent_dims, Rng& rng) {
  if (class_count < 1) throw UsageError("make_latent: class_count must be >= 1");
  if (class_id < 0 || class_id >= class_count) {
    throw UsageError("make_latent: class_id " + std::to_string(class_id) +
                     " out of range [0, " + std::to_string(class_count) + ")");
  }
  if (length < 2) throw UsageError("make_latent: length must be >= 2");
  if (latent_dims < 1) throw UsageError("make_latent: latent_dims must be >= 1");

  LatentSequence z;
  z.class_id = class_id;
  z.latent_dims = latent_dims;
  z.class_count = class_count;
  z.data = Matrix::Zero(latent_dims + class_count, length);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < length; ++t) {
    for (int d = 0; d < latent_dims; ++d) z.data(d, t) = normal(rng);
    z.data(latent_dims + class_id, t) = 1.0;
  }
  return z;
}

GruCellState gru_cell_forward(const GruLayerParams& p, const Vector& x, const Vector& h_prev) {
  check_layer(p, "gru_cell_forward");
  if (x.size() != p.w_update.cols()) throw DataError("gru_cell_forward: input size mismatch");
  if (h_prev.size() != p.w_update.rows()) throw DataError("gru_cell_forward: state size mismatch");
  GruCellState s;
  s.update = sigmoid(p.w_update * x + p.u_update * h_prev + p.b_update);
  s.reset = sigmoid(p.w_reset * x + p.u_reset * h_prev + p.b_reset);
  s.cand = (p.w_cand * x + p.u_cand * (s.reset.cwiseProduct(h_prev)) + p.b_cand).array().tanh();
  s.hidden = (Vector::Ones(h_prev.size()) - s.update).cwiseProduct(h_prev) +
             s.update.cwiseProduct(s.cand);
  return s;
}

namespace {

ForwardTape run_forward(const GeneratorParams& params, const LatentSequence& z, bool record) {
  if (params.layers.empty()) throw DataError("generator has no layers");
  if (z.data.rows() != params.input_size()) {
    throw DataError("latent size " + std::to_string(z.data.rows()) +
                    " does not match generator input " + std::to_string(params.input_size()));
  }
  const auto len = z.data.cols();

  ForwardTape tape;
  if (record) {
    tape.input = z.data;
    tape.layers.resize(params.layers.size());
  }

  Matrix x = z.data;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const GruLayerParams& p = params.layers[l];
    check_layer(p, "generator_forward");
    if (x.rows() != p.w_update.cols()) throw DataError("generator layer input size mismatch");
    const auto h = p.w_update.rows();
    Matrix hs(h, len), us(h, len), rs(h, len), cs(h, len);
    Vector h_prev = Vector::Zero(h);
    for (Eigen::Index t = 0; t < len; ++t) {
      const Vector xt = x.col(t);
      const Vector u = sigmoid(p.w_update * xt + p.u_update * h_prev + p.b_update);
      const Vector r = sigmoid(p.w_reset * xt + p.u_reset * h_prev + p.b_reset);
      const Vector c =
          (p.w_cand * xt + p.u_cand * (r.cwiseProduct(h_prev)) + p.b_cand).array().tanh();
      h_prev = (Vector::Ones(h) - u).cwiseProduct(h_prev) + u.cwiseProduct(c);
      us.col(t) = u;
      rs.col(t) = r;
      cs.col(t) = c;
      hs.col(t) = h_prev;
    }
    if (record) {
      tape.layers[l].update = std::move(us);
      tape.layers[l].reset = std::move(rs);
      tape.layers[l].cand = std::move(cs);
      tape.layers[l].hidden = hs;
    }
    x = std::move(hs);
  }

  if (params.w_out.cols() != x.rows() || params.b_out.size() != params.w_out.rows()) {
    throw DataError("generator output head shape mismatch");
  }
  Matrix out = ((params.w_out * x).colwise() + params.b_out).array().tanh();
  if (!all_finite(out)) throw NumericError("generator produced non-finite output");
  tape.output = std::move(out);
  return tape;
}

}  // namespace

GeneratorOutput generator_forward(const GeneratorParams& params, const LatentSequence& z) {
  GeneratorOutput out;
  out.tape = run_forward(params, z, /*record=*/true);
  out.gesture.points = out.tape.output;
  out.gesture.class_id = z.class_id;
  return out;
}

Gesture generator_sample(const GeneratorParams& params, const LatentSequence& z) {
  ForwardTape tape = run_forward(params, z, /*record=*/false);
  Gesture g;
  g.points = std::move(tape.output);
  g.class_id = z.class_id;
  return g;
}

GeneratorParams generator_backward(const GeneratorParams& params, const ForwardTape& tape,
                                   const Matrix& upstream) {
  if (tape.layers.size() != params.layers.size()) {
    throw DataError("generator_backward: tape does not match parameters");
  }
  const auto len = tape.output.cols();
  if (upstream.rows() != tape.output.rows() || upstream.cols() != len) {
    throw DataError("generator_backward: upstream gradient shape mismatch");
  }

  GeneratorParams grads = zeros_like(params);
  const Matrix& h_last = tape.layers.back().hidden;

  // Output head: y = tanh(w_out h + b_out).
  const Matrix d_pre = upstream.cwiseProduct(
      (Matrix::Ones(tape.output.rows(), len) - tape.output.cwiseProduct(tape.output)));
  grads.w_out = d_pre * h_last.transpose();
  grads.b_out = d_pre.rowwise().sum();
  Matrix d_h = params.w_out.transpose() * d_pre;  // gradient w.r.t. top hidden sequence

  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const GruLayerParams& p = params.layers[static_cast<std::size_t>(l)];
    const ForwardTape::LayerTape& lt = tape.layers[static_cast<std::size_t>(l)];
    GruLayerParams& g = grads.layers[static_cast<std::size_t>(l)];
    const Matrix& x =
        l == 0 ? tape.input : tape.layers[static_cast<std::size_t>(l) - 1].hidden;
    const auto h = p.w_update.rows();

    Matrix d_x = Matrix::Zero(x.rows(), len);
    Vector carry = Vector::Zero(h);  // gradient flowing into h_{t-1}
    for (Eigen::Index t = len - 1; t >= 0; --t) {
      const Vector dh = d_h.col(t) + carry;
      const Vector h_prev = t > 0 ? Vector(lt.hidden.col(t - 1)) : Vector(Vector::Zero(h));
      const Vector u = lt.update.col(t);
      const Vector r = lt.reset.col(t);
      const Vector c = lt.cand.col(t);
      const Vector xt = x.col(t);

      // h = (1-u) h_prev + u c
      const Vector du = dh.cwiseProduct(c - h_prev);
      const Vector dc = dh.cwiseProduct(u);
      Vector dh_prev = dh.cwiseProduct(Vector::Ones(h) - u);

      // candidate pre-activation
      const Vector dpre_c = dc.cwiseProduct(Vector::Ones(h) - c.cwiseProduct(c));
      g.w_cand += dpre_c * xt.transpose();
      g.u_cand += dpre_c * (r.cwiseProduct(h_prev)).transpose();
      g.b_cand += dpre_c;
      const Vector d_rh = p.u_cand.transpose() * dpre_c;  // w.r.t. r .* h_prev
      const Vector dr = d_rh.cwiseProduct(h_prev);
      dh_prev += d_rh.cwiseProduct(r);

      // update gate pre-activation
      const Vector dpre_u = du.cwiseProduct(u).cwiseProduct(Vector::Ones(h) - u);
      g.w_update += dpre_u * xt.transpose();
      g.u_update += dpre_u * h_prev.transpose();
      g.b_update += dpre_u;
      dh_prev += p.u_update.transpose() * dpre_u;

      // reset gate pre-activation
      const Vector dpre_r = dr.cwiseProduct(r).cwiseProduct(Vector::Ones(h) - r);
      g.w_reset += dpre_r * xt.transpose();
      g.u_reset += dpre_r * h_prev.transpose();
      g.b_reset += dpre_r;
      dh_prev += p.u_reset.transpose() * dpre_r;

      d_x.col(t) = p.w_update.transpose() * dpre_u + p.w_reset.transpose() * dpre_r +
                   p.w_cand.transpose() * dpre_c;
      carry = dh_prev;
    }
    d_h = std::move(d_x);  // becomes the upstream for the layer below
  }
  return grads;
}

GeneratorParams init_params(const std::vector<int>& hidden_sizes, int input_size, int output_dims,
                            std::uint64_t seed) {
  if (hidden_sizes.empty()) throw UsageError("init_params: need at least one hidden layer");
  for (int h : hidden_sizes) {
    if (h < 1) throw UsageError("init_params: hidden sizes must be >= 1");
  }
  if (input_size < 1 || output_dims < 1) {
    throw UsageError("init_params: input and output sizes must be >= 1");
  }

  Rng rng(seed);
  const auto xavier = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = uniform(rng);
    }
    return m;
  };

  GeneratorParams p;
  int in = input_size;
  for (int h : hidden_sizes) {
    GruLayerParams layer;
    layer.w_update = xavier(h, in);
    layer.u_update = xavier(h, h);
    layer.b_update = Vector::Zero(h);
    layer.w_reset = xavier(h, in);
    layer.u_reset = xavier(h, h);
    layer.b_reset = Vector::Zero(h);
    layer.w_cand = xavier(h, in);
    layer.u_cand = xavier(h, h);
    layer.b_cand = Vector::Zero(h);
    p.layers.push_back(std::move(layer));
    in = h;
  }
  p.w_out = xavier(output_dims, in);
  p.b_out = Vector::Zero(output_dims);
  return p;
}

GeneratorParams zeros_like(const GeneratorParams& params) {
  GeneratorParams z;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    GruLayerParams g;
    g.w_update = Matrix::Zero(l.w_update.rows(), l.w_update.cols());
    g.u_update = Matrix::Zero(l.u_update.rows(), l.u_update.cols());
    g.b_update = Vector::Zero(l.b_update.size());
    g.w_reset = Matrix::Zero(l.w_reset.rows(), l.w_reset.cols());
    g.u_reset = Matrix::Zero(l.u_reset.rows(), l.u_reset.cols());
    g.b_reset = Vector::Zero(l.b_reset.size());
    g.w_cand = Matrix::Zero(l.w_cand.rows(), l.w_cand.cols());
    g.u_cand = Matrix::Zero(l.u_cand.rows(), l.u_cand.cols());
    g.b_cand = Vector::Zero(l.b_cand.size());
    z.layers.push_back(std::move(g));
  }
  z.w_out = Matrix::Zero(params.w_out.rows(), params.w_out.cols());
  z.b_out = Vector::Zero(params.b_out.size());
  return z;
}

std::vector<TensorView> tensor_views(GeneratorParams& params) {
  std::vector<TensorView> views;
  const auto add = [&views](auto& tensor) {
    views.push_back({tensor.data(), static_cast<std::size_t>(tensor.size())});
  };
  for (auto& l : params.layers) {
    add(l.w_update);
    add(l.u_update);
    add(l.b_update);
    add(l.w_reset);
    add(l.u_reset);
    add(l.b_reset);
    add(l.w_cand);
    add(l.u_cand);
    add(l.b_cand);
  }
  add(params.w_out);
  add(params.b_out);
  return views;
}

std::vector<ConstTensorView> tensor_views(const GeneratorParams& params) {
  std::vector<ConstTensorView> views;
  const auto add = [&views](const auto& tensor) {
    views.push_back({tensor.data(), static_cast<std::size_t>(tensor.size())});
  };
  for (const auto& l : params.layers) {
    add(l.w_update);
    add(l.u_update);
    add(l.b_update);
    add(l.w_reset);
    add(l.u_reset);
    add(l.b_reset);
    add(l.w_cand);
    add(l.u_cand);
    add(l.b_cand);
  }
  add(params.w_out);
  add(params.b_out);
  return views;
}

namespace {

constexpr char kMagic[8] = {'N', 'A', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("truncated checkpoint file: " + path);
  }
  return v;
}
std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("truncated checkpoint file: " + path);
  }
  return v;
}

// Tensors are stored row-major regardless of Eigen's in-memory layout.
void write_tensor(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}
void write_tensor(std::ofstream& out, const Vector& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double)) * v.size());
}

void read_tensor(std::ifstream& in, Matrix& m, const std::string& path) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw DataError("truncated checkpoint file: " + path);
      }
      m(r, c) = v;
    }
  }
}
void read_tensor(std::ifstream& in, Vector& v, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(sizeof(double)) * v.size())) {
    throw DataError("truncated checkpoint file: " + path);
  }
}

void write_params(std::ofstream& out, const GeneratorParams& p) {
  for (const auto& l : p.layers) {
    write_tensor(out, l.w_update);
    write_tensor(out, l.u_update);
    write_tensor(out, l.b_update);
    write_tensor(out, l.w_reset);
    write_tensor(out, l.u_reset);
    write_tensor(out, l.b_reset);
    write_tensor(out, l.w_cand);
    write_tensor(out, l.u_cand);
    write_tensor(out, l.b_cand);
  }
  write_tensor(out, p.w_out);
  write_tensor(out, p.b_out);
}

void read_params(std::ifstream& in, GeneratorParams& p, const std::string& path) {
  for (auto& l : p.layers) {
    read_tensor(in, l.w_update, path);
    read_tensor(in, l.u_update, path);
    read_tensor(in, l.b_update, path);
    read_tensor(in, l.w_reset, path);
    read_tensor(in, l.u_reset, path);
    read_tensor(in, l.b_reset, path);
    read_tensor(in, l.w_cand, path);
    read_tensor(in, l.u_cand, path);
    read_tensor(in, l.b_cand, path);
  }
  read_tensor(in, p.w_out, path);
  read_tensor(in, p.b_out, path);
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint file: " + path);
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(c.params.output_dims()));
  write_u32(out, static_cast<std::uint32_t>(c.latent_dims));
  write_u32(out, static_cast<std::uint32_t>(c.class_count));
  write_u32(out, static_cast<std::uint32_t>(c.length));
  write_u64(out, c.seed);
  write_u64(out, c.step);
  write_u64(out, c.adam_t);
  const auto sizes = c.params.hidden_sizes();
  write_u32(out, static_cast<std::uint32_t>(sizes.size()));
  for (int h : sizes) write_u32(out, static_cast<std::uint32_t>(h));
  write_params(out, c.params);
  write_params(out, c.adam_m);
  write_params(out, c.adam_v);
  if (!out) throw DataError("failed while writing checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file: " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  Checkpoint c;
  const auto dims = static_cast<int>(read_u32(in, path));
  c.latent_dims = static_cast<int>(read_u32(in, path));
  c.class_count = static_cast<int>(read_u32(in, path));
  c.length = static_cast<int>(read_u32(in, path));
  c.seed = read_u64(in, path);
  c.step = read_u64(in, path);
  c.adam_t = read_u64(in, path);
  const auto n_layers = read_u32(in, path);
  if (n_layers == 0 || n_layers > 64) throw DataError("implausible layer count: " + path);
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n_layers; ++i) sizes.push_back(static_cast<int>(read_u32(in, path)));

  // Rebuild the shapes, then fill them from the stream.
  c.params = init_params(sizes, c.latent_dims + c.class_count, dims, 0);
  read_params(in, c.params, path);
  c.adam_m = zeros_like(c.params);
  c.adam_v = zeros_like(c.params);
  read_params(in, c.adam_m, path);
  read_params(in, c.adam_v, path);
  in.peek();
  if (!in.eof()) throw DataError("trailing bytes in checkpoint file: " + path);
  return c;
}

}  // namespace deepnag
