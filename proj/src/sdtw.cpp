#include "deepnag/sdtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace deepnag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const Gesture& x, const Gesture& y) {
  if (x.dims() != y.dims()) {
    throw DataError("sequence dimensionality mismatch: " + std::to_string(x.dims()) + " vs " +
                    std::to_string(y.dims()));
  }
  if (x.length() < 1 || y.length() < 1) throw DataError("empty sequence");
}

// The DP sequences: raw sample points for ED, direction vectors for COS.
Matrix dp_sequence(const Gesture& g, CostKind kind) {
  return kind == CostKind::ED ? g.points : path_vectors(g.points);
}

// Soft minimum of the three DP predecessors. Kept as the single shared
// cell routine so every scan order performs identical arithmetic.
inline double softmin3(double a, double b, double c, double gamma) {
  const double m = std::min(a, std::min(b, c));
  if (m == kInf) return kInf;
  const double sum =
      std::exp((m - a) / gamma) + std::exp((m - b) / gamma) + std::exp((m - c) / gamma);
  return m - gamma * std::log(sum);
}

inline double hardmin3(double a, double b, double c) { return std::min(a, std::min(b, c)); }

Matrix cost_matrix(const Matrix& a, const Matrix& b, CostKind kind) {
  Matrix cost(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      cost(i, j) = point_cost(kind, a.col(i), b.col(j));
    }
  }
  return cost;
}

}  // namespace

double point_cost(CostKind kind, const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DataError("point dimensionality mismatch");
  if (kind == CostKind::ED) return (a - b).squaredNorm();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;  // zero-norm direction: maximal cost
  return 1.0 - a.dot(b) / (na * nb);
}

double softmin(std::span<const double> values, double gamma) {
  if (!(gamma > 0.0)) throw UsageError("softmin gamma must be positive");
  if (values.empty()) throw UsageError("softmin needs at least one value");
  double m = kInf;
  for (double v : values) m = std::min(m, v);
  if (m == kInf) return kInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp((m - v) / gamma);
  return m - gamma * std::log(sum);
}

namespace detail {

AlignmentTape sequence_forward(const Matrix& a, const Matrix& b, CostKind kind, double gamma,
                               bool wavefront, ThreadPool* pool) {
  if (!(gamma > 0.0)) throw UsageError("sdtw gamma must be positive");
  if (!all_finite(a) || !all_finite(b)) throw DataError("sdtw input contains non-finite values");

  AlignmentTape tape;
  tape.kind = kind;
  tape.gamma = gamma;
  tape.a_seq = a;
  tape.b_seq = b;
  tape.cost = cost_matrix(a, b, kind);

  const Eigen::Index n = a.cols();
  const Eigen::Index m = b.cols();
  Matrix& acc = tape.acc;
  acc.setConstant(n + 1, m + 1, kInf);
  acc(0, 0) = 0.0;

  const auto cell = [&](Eigen::Index i, Eigen::Index j) {
    acc(i, j) =
        tape.cost(i - 1, j - 1) + softmin3(acc(i - 1, j), acc(i, j - 1), acc(i - 1, j - 1), gamma);
  };

  if (!wavefront) {
    for (Eigen::Index i = 1; i <= n; ++i) {
      for (Eigen::Index j = 1; j <= m; ++j) cell(i, j);
    }
  } else {
    // Anti-diagonal sweep: cells on one diagonal only depend on the two
    // previous diagonals, so a diagonal can be computed in any order (or
    // concurrently). Splitting across the pool is reserved for long
    // diagonals where it can pay off.
    const bool split = pool != nullptr && pool->size() > 1 && std::min(n, m) >= 32;
    for (Eigen::Index d = 2; d <= n + m; ++d) {
      const Eigen::Index i_lo = std::max<Eigen::Index>(1, d - m);
      const Eigen::Index i_hi = std::min(n, d - 1);
      if (i_hi < i_lo) continue;
      const auto count = static_cast<std::size_t>(i_hi - i_lo + 1);
      if (split && count >= 8) {
        pool->parallel_for(count, [&](std::size_t k) {
          const Eigen::Index i = i_lo + static_cast<Eigen::Index>(k);
          cell(i, d - i);
        });
      } else {
        for (Eigen::Index i = i_lo; i <= i_hi; ++i) cell(i, d - i);
      }
    }
  }

  tape.value = acc(n, m);
  if (!std::isfinite(tape.value)) {
    throw NumericError("sdtw produced a non-finite value (check gamma and data scale)");
  }
  return tape;
}

Vector cost_gradient(CostKind kind, const Vector& a, const Vector& b) {
  if (kind == CostKind::ED) return 2.0 * (a - b);
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return Vector::Zero(a.size());  // locally flat by definition
  const double dot = a.dot(b);
  return (dot / (na * na * na * nb)) * a - b / (na * nb);
}

Matrix sequence_backward(const AlignmentTape& tape) {
  const Eigen::Index n = tape.cost.rows();
  const Eigen::Index m = tape.cost.cols();
  const double gamma = tape.gamma;
  const Matrix& acc = tape.acc;

  // Expected-alignment weights: E(i,j) is the total soft probability
  // mass of alignment paths passing through cell (i,j), obtained by the
  // reverse recursion. Transition weights use the identity
  //   exp((acc(next) - acc(cur) - cost(next)) / gamma)
  // whose argument is always <= 0, so nothing can overflow.
  Matrix e = Matrix::Zero(n + 1, m + 1);
  e(n, m) = 1.0;
  for (Eigen::Index i = n; i >= 1; --i) {
    for (Eigen::Index j = m; j >= 1; --j) {
      if (i == n && j == m) continue;
      double w = 0.0;
      if (i + 1 <= n) {
        w += std::exp((acc(i + 1, j) - acc(i, j) - tape.cost(i, j - 1)) / gamma) * e(i + 1, j);
      }
      if (j + 1 <= m) {
        w += std::exp((acc(i, j + 1) - acc(i, j) - tape.cost(i - 1, j)) / gamma) * e(i, j + 1);
      }
      if (i + 1 <= n && j + 1 <= m) {
        w += std::exp((acc(i + 1, j + 1) - acc(i, j) - tape.cost(i, j)) / gamma) * e(i + 1, j + 1);
      }
      e(i, j) = w;
    }
  }

  Matrix d_seq = Matrix::Zero(tape.a_seq.rows(), n);
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index j = 1; j <= m; ++j) {
      const double w = e(i, j);
      if (w == 0.0) continue;
      d_seq.col(i - 1) += w * cost_gradient(tape.kind, tape.a_seq.col(i - 1), tape.b_seq.col(j - 1));
    }
  }
  return d_seq;
}

Matrix grad_to_points(const AlignmentTape& tape, const Matrix& d_seq) {
  if (tape.kind == CostKind::ED) return d_seq;
  // COS sequences are forward differences v_i = p_{i+1} - p_i; the
  // transpose of that map scatters each vector gradient onto its two
  // endpoints with opposite signs.
  const Eigen::Index len = tape.a_points_len;
  Matrix d_points = Matrix::Zero(d_seq.rows(), len);
  for (Eigen::Index i = 0; i + 1 < len; ++i) {
    d_points.col(i) -= d_seq.col(i);
    d_points.col(i + 1) += d_seq.col(i);
  }
  return d_points;
}

}  // namespace detail

double dtw_classic(const Gesture& x, const Gesture& y, CostKind kind) {
  check_pair(x, y);
  const Matrix a = dp_sequence(x, kind);
  const Matrix b = dp_sequence(y, kind);
  if (!all_finite(a) || !all_finite(b)) throw DataError("dtw input contains non-finite values");
  const Eigen::Index n = a.cols();
  const Eigen::Index m = b.cols();
  const Matrix cost = cost_matrix(a, b, kind);
  Matrix acc(n + 1, m + 1);
  acc.setConstant(kInf);
  acc(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index j = 1; j <= m; ++j) {
      acc(i, j) = cost(i - 1, j - 1) + hardmin3(acc(i - 1, j), acc(i, j - 1), acc(i - 1, j - 1));
    }
  }
  return acc(n, m);
}

SdtwResult sdtw_forward(const Gesture& x, const Gesture& y, CostKind kind, double gamma) {
  check_pair(x, y);
  AlignmentTape tape = detail::sequence_forward(dp_sequence(x, kind), dp_sequence(y, kind), kind,
                                                gamma, /*wavefront=*/false);
  tape.a_points_len = x.length();
  return SdtwResult{tape.value, std::move(tape)};
}

SdtwGradient sdtw_backward(const AlignmentTape& tape) {
  return SdtwGradient{detail::grad_to_points(tape, detail::sequence_backward(tape))};
}

std::vector<SdtwPairResult> sdtw_batch(const std::vector<GesturePair>& pairs, CostKind kind,
                                       double gamma, bool parallel, ThreadPool* pool) {
  std::vector<SdtwPairResult> out(pairs.size());
  if (pairs.empty()) return out;

  enum class Fail { none, usage, data, numeric };
  std::vector<Fail> fail(pairs.size(), Fail::none);
  std::vector<std::string> message(pairs.size());

  const auto eval = [&](std::size_t idx, bool wavefront, ThreadPool* wf_pool) {
    try {
      const Gesture& x = *pairs[idx].first;
      const Gesture& y = *pairs[idx].second;
      check_pair(x, y);
      AlignmentTape tape = detail::sequence_forward(dp_sequence(x, kind), dp_sequence(y, kind),
                                                    kind, gamma, wavefront, wf_pool);
      tape.a_points_len = x.length();
      out[idx].value = tape.value;
      out[idx].d_points = detail::grad_to_points(tape, detail::sequence_backward(tape));
    } catch (const UsageError& ex) {
      fail[idx] = Fail::usage;
      message[idx] = ex.what();
    } catch (const NumericError& ex) {
      fail[idx] = Fail::numeric;
      message[idx] = ex.what();
    } catch (const std::exception& ex) {
      fail[idx] = Fail::data;
      message[idx] = ex.what();
    }
  };

  if (!parallel) {
    for (std::size_t i = 0; i < pairs.size(); ++i) eval(i, false, nullptr);
  } else {
    std::unique_ptr<ThreadPool> local;
    if (!pool) local = std::make_unique<ThreadPool>();
    ThreadPool& p = pool ? *pool : *local;
    if (pairs.size() < static_cast<std::size_t>(p.size())) {
      // Few long pairs: let each matrix use the whole pool diagonal-wise.
      for (std::size_t i = 0; i < pairs.size(); ++i) eval(i, true, &p);
    } else {
      p.parallel_for(pairs.size(), [&](std::size_t i) { eval(i, true, nullptr); });
    }
  }

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string prefixed = "pair " + std::to_string(i) + ": " + message[i];
    switch (fail[i]) {
      case Fail::none:
        break;
      case Fail::usage:
        throw UsageError(prefixed);
      case Fail::data:
        throw DataError(prefixed);
      case Fail::numeric:
        throw NumericError(prefixed);
    }
  }
  return out;
}

}  // namespace deepnag
