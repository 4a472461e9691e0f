#pragma once

#include <span>
#include <vector>

#include "maskgen/autograd.hpp"
#include "maskgen/kernels.hpp"
#include "maskgen/random.hpp"
#include "maskgen/types.hpp"

// Differentiable operations over Var. Shapes follow the kernels.
namespace maskgen::ops {

Var constant(Tensor value);

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);
Var affine(const Var& x, const Var& w, const Var& b);

Var add(const Var& a, const Var& b);
Var add_constant(const Var& a, const Tensor& c);
// Adds a [d] vector to every row of an [n x d] matrix.
Var add_bias(const Var& x, const Var& b);
Var scale(const Var& a, Scalar factor);

Var gelu(const Var& x);
Var softmax_rows(const Var& x);
Var layer_norm(const Var& x, const Var& gain, const Var& bias,
               Scalar eps = kernels::kLayerNormEps);

// Rows of `table` picked by index; the gradient scatters back.
Var gather_rows(const Var& table, std::span<const std::size_t> rows);
Var select_rows(const Var& x, std::span<const std::size_t> rows);

// Builds a [total_rows x d] matrix where part k fills rows dest[k].
Var scatter_rows(std::span<const Var> parts, std::span<const std::vector<std::size_t>> dest,
                 std::size_t total_rows);

Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);

// Inverted dropout; identity when rate == 0.
Var dropout(const Var& x, Scalar rate, Rng& rng);

// Mean token negative log-likelihood; returns a [1] tensor.
Var cross_entropy(const Var& logits, std::span<const TokenId> targets, TokenId ignore_id);

Var sum(const Var& x);
Var sum_squares(const Var& x);

}  // namespace maskgen::ops
