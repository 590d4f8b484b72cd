#include "deepnag/loss.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace deepnag {

namespace {

void check_quad(const BatchQuad& quad) {
  const std::vector<Gesture>* sets[4] = {&quad.fake1, &quad.fake2, &quad.real1, &quad.real2};
  const char* names[4] = {"fake1", "fake2", "real1", "real2"};
  for (int s = 0; s < 4; ++s) {
    if (sets[s]->empty()) throw DataError(std::string("quad set ") + names[s] + " is empty");
  }
  const int dims = quad.fake1.front().dims();
  const int len = quad.fake1.front().length();
  for (int s = 0; s < 4; ++s) {
    for (const auto& g : *sets[s]) {
      if (g.dims() != dims || g.length() != len) {
        throw DataError(std::string("quad set ") + names[s] + " has mismatched gesture shape");
      }
    }
  }
}

// Pairwise soft alignment values, first set always the first argument.
// Evaluated through the shared batch machinery so the cross product
// inherits the kernel's parallelism.
Matrix cross_values(const std::vector<Gesture>& a, const std::vector<Gesture>& b, CostKind kind,
                    double gamma, ThreadPool* pool) {
  Matrix values(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  const std::size_t total = a.size() * b.size();
  std::string first_error;
  bool numeric = false;
  const auto eval = [&](std::size_t flat) {
    const std::size_t i = flat / b.size();
    const std::size_t j = flat % b.size();
    const auto tape =
        detail::sequence_forward(kind == CostKind::ED ? a[i].points : path_vectors(a[i].points),
                                 kind == CostKind::ED ? b[j].points : path_vectors(b[j].points),
                                 kind, gamma, pool != nullptr);
    values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = tape.value;
  };
  if (pool && pool->size() > 1) {
    std::mutex err_mutex;
    pool->parallel_for(total, [&](std::size_t flat) {
      try {
        eval(flat);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error.empty()) {
          first_error = ex.what();
          numeric = dynamic_cast<const NumericError*>(&ex) != nullptr;
        }
      }
    });
    if (!first_error.empty()) {
      if (numeric) throw NumericError(first_error);
      throw DataError(first_error);
    }
  } else {
    for (std::size_t flat = 0; flat < total; ++flat) eval(flat);
  }
  return values;
}

struct AhdParts {
  double value = 0.0;
  std::vector<Eigen::Index> row_argmin;  // per row of the cross matrix
  std::vector<Eigen::Index> col_argmin;  // per column
};

// Average Hausdorff terms from a precomputed cross matrix; argmin ties
// resolve to the lowest index (first strict improvement wins).
AhdParts ahd_from_cross(const Matrix& values) {
  AhdParts parts;
  const Eigen::Index rows = values.rows();
  const Eigen::Index cols = values.cols();
  parts.row_argmin.resize(static_cast<std::size_t>(rows));
  parts.col_argmin.resize(static_cast<std::size_t>(cols));
  double row_sum = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < cols; ++j) {
      if (values(i, j) < values(i, best)) best = j;
    }
    parts.row_argmin[static_cast<std::size_t>(i)] = best;
    row_sum += values(i, best);
  }
  double col_sum = 0.0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < rows; ++i) {
      if (values(i, j) < values(best, j)) best = i;
    }
    parts.col_argmin[static_cast<std::size_t>(j)] = best;
    col_sum += values(best, j);
  }
  parts.value = row_sum / static_cast<double>(rows) + col_sum / static_cast<double>(cols);
  return parts;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Accumulates scale * d AHD(first, second) / d first[i] into grads,
// given the argmin selections. Only the selected pairs need a backward
// pass; they are recomputed (forward + reverse sweep) on demand.
void accumulate_ahd_gradient(std::vector<Matrix>& grads, const std::vector<Gesture>& first,
                             const std::vector<Gesture>& second, const AhdParts& parts,
                             CostKind kind, double gamma, double scale, ThreadPool* pool) {
  const auto rows = static_cast<Eigen::Index>(first.size());
  const auto cols = static_cast<Eigen::Index>(second.size());
  // Pair weight = (1/|first|) when selected as a row minimum plus
  // (1/|second|) for every column that selects it.
  Matrix weight = Matrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    weight(i, parts.row_argmin[static_cast<std::size_t>(i)]) += 1.0 / static_cast<double>(rows);
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    weight(parts.col_argmin[static_cast<std::size_t>(j)], j) += 1.0 / static_cast<double>(cols);
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> selected;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (weight(i, j) != 0.0) selected.emplace_back(i, j);
    }
  }

  std::vector<Matrix> partial(selected.size());
  const auto eval = [&](std::size_t k) {
    const auto [i, j] = selected[k];
    AlignmentTape tape = detail::sequence_forward(
        kind == CostKind::ED ? first[static_cast<std::size_t>(i)].points
                             : path_vectors(first[static_cast<std::size_t>(i)].points),
        kind == CostKind::ED ? second[static_cast<std::size_t>(j)].points
                             : path_vectors(second[static_cast<std::size_t>(j)].points),
        kind, gamma, pool != nullptr);
    tape.a_points_len = first[static_cast<std::size_t>(i)].length();
    partial[k] = (scale * weight(i, j)) *
                 detail::grad_to_points(tape, detail::sequence_backward(tape));
  };
  if (pool && pool->size() > 1) {
    pool->parallel_for(selected.size(), eval);
  } else {
    for (std::size_t k = 0; k < selected.size(); ++k) eval(k);
  }
  // Deterministic reduction: accumulate in selection order regardless of
  // which worker produced each slot.
  for (std::size_t k = 0; k < selected.size(); ++k) {
    grads[static_cast<std::size_t>(selected[k].first)] += partial[k];
  }
}

}  // namespace

double resample_loss(const Gesture& g) {
  const Matrix vecs = path_vectors(g.points);
  const auto segs = vecs.cols();
  double mean = 0.0;
  for (Eigen::Index i = 0; i < segs; ++i) mean += vecs.col(i).norm();
  mean /= static_cast<double>(segs);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < segs; ++i) {
    const double dev = vecs.col(i).norm() - mean;
    loss += dev * dev;
  }
  return loss / static_cast<double>(segs);
}

Matrix resample_loss_gradient(const Gesture& g) {
  const Matrix vecs = path_vectors(g.points);
  const auto segs = vecs.cols();
  Vector lens(segs);
  for (Eigen::Index i = 0; i < segs; ++i) lens(i) = vecs.col(i).norm();
  const double mean = lens.mean();
  // d loss / d len_k = (2/(L-1)) * (len_k - mean); the mean's own
  // dependence cancels because the deviations sum to zero.
  Matrix d_points = Matrix::Zero(g.points.rows(), g.points.cols());
  for (Eigen::Index i = 0; i < segs; ++i) {
    if (lens(i) == 0.0) continue;  // |v| has no gradient at 0; use 0
    const Vector d_vec =
        (2.0 / static_cast<double>(segs)) * (lens(i) - mean) * (vecs.col(i) / lens(i));
    d_points.col(i) -= d_vec;
    d_points.col(i + 1) += d_vec;
  }
  return d_points;
}

double deepnag_term(const BatchQuad& quad, CostKind kind, double gamma, ThreadPool* pool) {
  check_quad(quad);
  const AhdParts sim = ahd_from_cross(cross_values(quad.fake1, quad.real1, kind, gamma, pool));
  const AhdParts fake = ahd_from_cross(cross_values(quad.fake1, quad.fake2, kind, gamma, pool));
  const AhdParts real = ahd_from_cross(cross_values(quad.real1, quad.real2, kind, gamma, pool));
  return sim.value + std::abs(fake.value - real.value);
}

LossBreakdown deepnag_total(const BatchQuad& quad, double gamma, double alpha, ThreadPool* pool) {
  check_quad(quad);
  LossBreakdown out;
  out.alpha = alpha;
  for (CostKind kind : {CostKind::ED, CostKind::COS}) {
    const AhdParts sim = ahd_from_cross(cross_values(quad.fake1, quad.real1, kind, gamma, pool));
    const AhdParts fake = ahd_from_cross(cross_values(quad.fake1, quad.fake2, kind, gamma, pool));
    const AhdParts real = ahd_from_cross(cross_values(quad.real1, quad.real2, kind, gamma, pool));
    const double variation = std::abs(fake.value - real.value);
    if (kind == CostKind::ED) {
      out.ed_similarity = sim.value;
      out.ed_variation = variation;
    } else {
      out.cos_similarity = sim.value;
      out.cos_variation = variation;
    }
  }
  double resample_sum = 0.0;
  for (const auto& g : quad.fake1) resample_sum += resample_loss(g);
  out.resample = resample_sum / static_cast<double>(quad.fake1.size());
  return out;
}

QuadGradient deepnag_gradient(const BatchQuad& quad, double gamma, double alpha,
                              ThreadPool* pool) {
  check_quad(quad);
  QuadGradient out;
  out.loss.alpha = alpha;
  out.d_fake1.assign(quad.fake1.size(),
                     Matrix::Zero(quad.fake1.front().dims(), quad.fake1.front().length()));

  for (CostKind kind : {CostKind::ED, CostKind::COS}) {
    const AhdParts sim = ahd_from_cross(cross_values(quad.fake1, quad.real1, kind, gamma, pool));
    const AhdParts fake = ahd_from_cross(cross_values(quad.fake1, quad.fake2, kind, gamma, pool));
    const AhdParts real = ahd_from_cross(cross_values(quad.real1, quad.real2, kind, gamma, pool));
    const double diff = fake.value - real.value;
    if (kind == CostKind::ED) {
      out.loss.ed_similarity = sim.value;
      out.loss.ed_variation = std::abs(diff);
    } else {
      out.loss.cos_similarity = sim.value;
      out.loss.cos_variation = std::abs(diff);
    }
    accumulate_ahd_gradient(out.d_fake1, quad.fake1, quad.real1, sim, kind, gamma, 1.0, pool);
    const double s = sign_of(diff);  // subgradient of |.| at 0 is 0
    if (s != 0.0) {
      accumulate_ahd_gradient(out.d_fake1, quad.fake1, quad.fake2, fake, kind, gamma, s, pool);
    }
  }

  double resample_sum = 0.0;
  const double inv = 1.0 / static_cast<double>(quad.fake1.size());
  for (std::size_t i = 0; i < quad.fake1.size(); ++i) {
    resample_sum += resample_loss(quad.fake1[i]);
    out.d_fake1[i] += (alpha * inv) * resample_loss_gradient(quad.fake1[i]);
  }
  out.loss.resample = resample_sum * inv;
  return out;
}

double kl_diag_gaussian(const Vector& mu, const Vector& sigma) {
  if (mu.size() != sigma.size()) throw DataError("kl: mu and sigma sizes differ");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double s = sigma(i);
    if (!(s > 0.0)) throw DataError("kl: sigma must be positive");
    sum += 0.5 * (mu(i) * mu(i) + s * s - 1.0 - std::log(s * s));
  }
  return sum;
}

VaeLoss vae_loss(const Gesture& x, const Gesture& x_rec, const Vector& mu, const Vector& sigma,
                 CostKind kind, double gamma) {
  VaeLoss out;
  out.reconstruction = sdtw_forward(x, x_rec, kind, gamma).value;
  out.kl = kl_diag_gaussian(mu, sigma);
  return out;
}

}  // namespace deepnag
