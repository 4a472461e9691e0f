#include "maskgen/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "maskgen/errors.hpp"

namespace maskgen::kernels {
namespace {

using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " expects a matrix, got " +
                     shape_string(t.shape()));
  }
}

constexpr Scalar kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr Scalar kGeluCubic = 0.044715;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul inner dimensions disagree: " + shape_string(a.shape()) +
                     " . " + shape_string(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt inner dimensions disagree: " + shape_string(a.shape()) +
                     " . " + shape_string(b.shape()) + "^T");
  }
  Tensor out({a.rows(), b.rows()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn inner dimensions disagree: " + shape_string(a.shape()) +
                     "^T . " + shape_string(b.shape()));
  }
  Tensor out({a.cols(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a).transpose() * as_matrix(b);
  return out;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (b.rank() != 1 || w.rank() != 2 || b.size() != w.cols()) {
    throw ShapeError("affine bias " + shape_string(b.shape()) +
                     " does not match weight " + shape_string(w.shape()));
  }
  Tensor out = matmul(x, w);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const Scalar mx = *std::max_element(r.begin(), r.end());
    Scalar total = 0;
    for (auto& v : r) {
      v = std::exp(v - mx);
      total += v;
    }
    for (auto& v : r) v /= total;
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const Scalar mx = *std::max_element(r.begin(), r.end());
    Scalar total = 0;
    for (Scalar v : r) total += std::exp(v - mx);
    const Scalar log_z = mx + std::log(total);
    for (auto& v : r) v -= log_z;
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Scalar eps) {
  const std::size_t d = x.cols();
  if (d == 0 || gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm parameters " + shape_string(gain.shape()) + "/" +
                     shape_string(bias.shape()) + " do not match input " +
                     shape_string(x.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    Scalar mean = 0;
    for (Scalar v : r) mean += v;
    mean /= static_cast<Scalar>(d);
    Scalar var = 0;
    for (Scalar v : r) var += (v - mean) * (v - mean);
    var /= static_cast<Scalar>(d);
    const Scalar inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - mean) * inv_std * gain[j] + bias[j];
  }
  return out;
}

Scalar gelu(Scalar x) {
  const Scalar inner = kGeluScale * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

Scalar gelu_derivative(Scalar x) {
  const Scalar inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const Scalar t = std::tanh(inner);
  const Scalar dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = gelu(v);
  return out;
}

Scalar cross_entropy(const Tensor& logits, std::span<const TokenId> targets,
                     TokenId ignore_id) {
  if (logits.rows() != targets.size()) {
    throw ShapeError("cross_entropy has " + std::to_string(targets.size()) +
                     " targets for logits " + shape_string(logits.shape()));
  }
  const auto vocab = static_cast<TokenId>(logits.cols());
  const Tensor log_probs = log_softmax_rows(logits);
  Scalar total = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const TokenId t = targets[i];
    if (t == ignore_id) continue;
    if (t < 0 || t >= vocab) {
      throw ShapeError("cross_entropy target " + std::to_string(t) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    total -= log_probs.at(i, static_cast<std::size_t>(t));
    ++counted;
  }
  if (counted == 0) throw EmptyLossError("cross_entropy: every target position is ignored");
  return total / static_cast<Scalar>(counted);
}

}  // namespace maskgen::kernels
