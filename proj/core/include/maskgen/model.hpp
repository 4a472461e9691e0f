#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maskgen/attention_mask.hpp"
#include "maskgen/autograd.hpp"
#include "maskgen/config.hpp"
#include "maskgen/multimodal.hpp"
#include "maskgen/random.hpp"

namespace maskgen {

struct EncodeOptions {
  bool keep_attention = false;
  // Dropout is applied only when an rng is supplied.
  Rng* dropout_rng = nullptr;
};

struct EncodeResult {
  // layers[0] is the embedded input, layers[L] the final layer output.
  std::vector<Var> layers;
  // attention[l][h] is the [S x S] probability matrix of head h in layer l+1;
  // filled only with EncodeOptions::keep_attention.
  std::vector<std::vector<Tensor>> attention;
};

// Post-norm Transformer encoder with learned absolute positions and a
// masked-token decoding head whose output matrix is the token embedding table.
class Model {
 public:
  explicit Model(ModelConfig config);

  // Weights ~ truncated normal(0, 0.02), norms at identity, biases zero.
  static Model init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  // Dropout is the one configuration value that may change after construction.
  void set_dropout(double rate);
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  Parameter& token_embedding() { return params_[token_embedding_]; }
  const Parameter& token_embedding() const { return params_[token_embedding_]; }
  Parameter& position_embedding() { return params_[position_embedding_]; }
  const Parameter& position_embedding() const { return params_[position_embedding_]; }
  Parameter& output_bias() { return params_[output_bias_]; }
  Parameter& projection_weight() { return params_[projection_weight_]; }
  const Parameter& projection_weight() const { return params_[projection_weight_]; }
  Parameter& projection_bias() { return params_[projection_bias_]; }
  const Parameter& projection_bias() const { return params_[projection_bias_]; }

  CrossModalProjection projection() const;

  // Redraws the cross-modal projection from its own seeded stream.
  void reinit_projection(std::uint64_t seed);

  // Textual slot: token row + position row (+ type row 0 if enabled).
  // Visual slot: projected object embedding + position row (+ type row 1).
  Var embed_sequence(const AssembledInput& input) const;

  EncodeResult encode(const Var& embedded, const AttentionMask& mask,
                      const EncodeOptions& options = {}) const;

  // hidden: [k x d] -> raw logits [k x V]
  Var decode_logits(const Var& hidden) const;
  Tensor decode_logits(std::span<const Scalar> hidden) const;

 private:
  struct LayerIndex {
    std::size_t query_w, query_b, key_w, key_b, value_w, value_b, attn_out_w, attn_out_b;
    std::size_t attn_norm_gain, attn_norm_bias;
    std::size_t ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
    std::size_t ffn_norm_gain, ffn_norm_bias;
  };

  Var layer_forward(const LayerIndex& layer, const Var& x, const Tensor& mask_bias,
                    const EncodeOptions& options, std::vector<Tensor>* attention) const;

  ModelConfig config_;
  ParameterStore params_;
  std::size_t token_embedding_ = 0;
  std::size_t position_embedding_ = 0;
  std::size_t type_embedding_ = 0;
  std::vector<LayerIndex> layers_;
  std::size_t head_w_ = 0, head_b_ = 0, head_norm_gain_ = 0, head_norm_bias_ = 0;
  std::size_t output_bias_ = 0;
  std::size_t projection_weight_ = 0, projection_bias_ = 0;
};

// Checksum of the raw bytes of a set of parameters, in registration order.
std::uint64_t parameter_checksum(const ParameterStore& params, ParamGroup group);

}  // namespace maskgen
