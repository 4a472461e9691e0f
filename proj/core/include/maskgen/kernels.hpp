#pragma once

#include <span>

#include "maskgen/tensor.hpp"
#include "maskgen/types.hpp"

// Plain (non-differentiable) dense kernels. The autograd ops in ops.hpp are
// thin wrappers that pair each of these with its vector-Jacobian product.
namespace maskgen::kernels {

inline constexpr Scalar kLayerNormEps = 1e-12;

// [n x p] . [p x q]
Tensor matmul(const Tensor& a, const Tensor& b);
// [n x p] . [q x p]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// [p x n]^T . [p x q]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// out[i][j] = sum_k x[i][k] w[k][j] + b[j]
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);

// Normalizes each row to zero mean / unit variance (eps added to the
// variance), then applies gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Scalar eps = kLayerNormEps);

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Scalar gelu(Scalar x);
Scalar gelu_derivative(Scalar x);
Tensor gelu(const Tensor& x);

// Mean over non-ignored rows of -log softmax(logits)[target]. Throws
// EmptyLossError if every row is ignored.
Scalar cross_entropy(const Tensor& logits, std::span<const TokenId> targets,
                     TokenId ignore_id);

}  // namespace maskgen::kernels
