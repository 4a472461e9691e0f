#include "maskgen/model.hpp"

#include <cmath>
#include <cstring>

#include "maskgen/errors.hpp"
#include "maskgen/ops.hpp"

namespace maskgen {
namespace {

constexpr Scalar kInitStddev = 0.02;

// Stream ids for derive_seed.
constexpr std::uint64_t kBackboneStream = 1;
constexpr std::uint64_t kProjectionStream = 2;

void fill_truncated_normal(Tensor& t, Rng& rng) {
  for (auto& v : t.values()) v = rng.truncated_normal(0.0, kInitStddev);
}

}  // namespace

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  const std::size_t v = config_.vocab_size;
  auto add = [this](const std::string& id, Shape shape, Scalar fill = 0.0,
                    ParamGroup group = ParamGroup::kBackbone) {
    return params_.add(id, Tensor(std::move(shape), fill), group);
  };

  token_embedding_ = add("embeddings.token", {v, d});
  position_embedding_ = add("embeddings.position", {config_.max_positions, d});
  if (config_.use_type_embeddings) type_embedding_ = add("embeddings.type", {2, d});

  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    LayerIndex li{};
    li.query_w = add(p + "attention.query.weight", {d, d});
    li.query_b = add(p + "attention.query.bias", {d});
    li.key_w = add(p + "attention.key.weight", {d, d});
    li.key_b = add(p + "attention.key.bias", {d});
    li.value_w = add(p + "attention.value.weight", {d, d});
    li.value_b = add(p + "attention.value.bias", {d});
    li.attn_out_w = add(p + "attention.output.weight", {d, d});
    li.attn_out_b = add(p + "attention.output.bias", {d});
    li.attn_norm_gain = add(p + "attention.norm.gain", {d}, 1.0);
    li.attn_norm_bias = add(p + "attention.norm.bias", {d});
    li.ffn_in_w = add(p + "ffn.in.weight", {d, config_.ffn_dim});
    li.ffn_in_b = add(p + "ffn.in.bias", {config_.ffn_dim});
    li.ffn_out_w = add(p + "ffn.out.weight", {config_.ffn_dim, d});
    li.ffn_out_b = add(p + "ffn.out.bias", {d});
    li.ffn_norm_gain = add(p + "ffn.norm.gain", {d}, 1.0);
    li.ffn_norm_bias = add(p + "ffn.norm.bias", {d});
    layers_.push_back(li);
  }

  head_w_ = add("head.transform.weight", {d, d});
  head_b_ = add("head.transform.bias", {d});
  head_norm_gain_ = add("head.norm.gain", {d}, 1.0);
  head_norm_bias_ = add("head.norm.bias", {d});
  output_bias_ = add("head.output_bias", {v});

  projection_weight_ = add("projection.weight", {config_.region_dim(), d}, 0.0, ParamGroup::kProjection);
  projection_bias_ = add("projection.bias", {d}, 0.0, ParamGroup::kProjection);
}

void Model::set_dropout(double rate) {
  ModelConfig next = config_;
  next.dropout = rate;
  next.validate();
  config_ = next;
}

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  Model model(config);
  Rng rng(derive_seed(seed, kBackboneStream));
  for (auto& p : model.params_) {
    if (p.group() != ParamGroup::kBackbone) continue;
    // matrices and embedding tables; vectors are biases or norm parameters
    if (p.value().rank() == 2) fill_truncated_normal(p.mutable_value(), rng);
  }
  model.reinit_projection(derive_seed(seed, kProjectionStream));
  return model;
}

void Model::reinit_projection(std::uint64_t seed) {
  Rng rng(seed);
  fill_truncated_normal(params_[projection_weight_].mutable_value(), rng);
  params_[projection_bias_].mutable_value().fill(0.0);
}

CrossModalProjection Model::projection() const {
  return {params_[projection_weight_].value(), params_[projection_bias_].value()};
}

Var Model::embed_sequence(const AssembledInput& input) const {
  const std::size_t s = input.size();
  if (input.positions.size() != s) throw ShapeError("input positions do not match its slots");

  std::vector<std::size_t> token_rows, token_ids, region_rows, region_ids, positions, types;
  for (std::size_t i = 0; i < s; ++i) {
    const Slot& slot = input.slots[i];
    if (input.positions[i] >= config_.max_positions) {
      throw PositionOverflowError("position " + std::to_string(input.positions[i]) +
                                  " exceeds max_positions " + std::to_string(config_.max_positions));
    }
    positions.push_back(input.positions[i]);
    if (slot.kind == SlotKind::kToken) {
      if (slot.token < 0 || static_cast<std::size_t>(slot.token) >= config_.vocab_size) {
        throw DataError("token id " + std::to_string(slot.token) + " outside vocabulary of " +
                        std::to_string(config_.vocab_size));
      }
      token_rows.push_back(i);
      token_ids.push_back(static_cast<std::size_t>(slot.token));
      types.push_back(0);
    } else {
      if (slot.region >= input.regions.rows()) throw ShapeError("region slot out of range");
      region_rows.push_back(i);
      region_ids.push_back(slot.region);
      types.push_back(1);
    }
  }

  std::vector<Var> parts;
  std::vector<std::vector<std::size_t>> dest;
  if (!token_rows.empty()) {
    parts.push_back(ops::gather_rows(params_[token_embedding_].var(), token_ids));
    dest.push_back(token_rows);
  }
  if (!region_rows.empty()) {
    if (input.regions.cols() != config_.region_dim()) {
      throw DimensionError("object embeddings have width " + std::to_string(input.regions.cols()) +
                           ", model expects " + std::to_string(config_.region_dim()));
    }
    Tensor objects({region_ids.size(), input.regions.cols()});
    for (std::size_t k = 0; k < region_ids.size(); ++k) {
      auto src = input.regions.row(region_ids[k]);
      std::copy(src.begin(), src.end(), objects.row(k).begin());
    }
    parts.push_back(ops::affine(ops::constant(std::move(objects)), params_[projection_weight_].var(),
                                params_[projection_bias_].var()));
    dest.push_back(region_rows);
  }
  Var content = ops::scatter_rows(parts, dest, s);
  Var out = ops::add(content, ops::gather_rows(params_[position_embedding_].var(), positions));
  if (config_.use_type_embeddings) {
    out = ops::add(out, ops::gather_rows(params_[type_embedding_].var(), types));
  }
  return out;
}

Var Model::layer_forward(const LayerIndex& li, const Var& x, const Tensor& mask_bias,
                         const EncodeOptions& options, std::vector<Tensor>* attention) const {
  const std::size_t heads = config_.num_heads;
  const std::size_t dh = config_.head_dim();
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dh));
  const Scalar rate = options.dropout_rng ? config_.dropout : 0.0;
  auto p = [this](std::size_t i) { return params_[i].var(); };

  Var q = ops::affine(x, p(li.query_w), p(li.query_b));
  Var k = ops::affine(x, p(li.key_w), p(li.key_b));
  Var v = ops::affine(x, p(li.value_w), p(li.value_b));

  std::vector<Var> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = ops::slice_cols(q, h * dh, dh);
    Var kh = ops::slice_cols(k, h * dh, dh);
    Var vh = ops::slice_cols(v, h * dh, dh);
    Var scores = ops::add_constant(ops::scale(ops::matmul_nt(qh, kh), scale), mask_bias);
    Var probs = ops::softmax_rows(scores);
    if (attention) attention->push_back(probs.value());
    if (rate > 0) probs = ops::dropout(probs, rate, *options.dropout_rng);
    head_out.push_back(ops::matmul(probs, vh));
  }
  Var attn = ops::affine(ops::concat_cols(head_out), p(li.attn_out_w), p(li.attn_out_b));
  if (rate > 0) attn = ops::dropout(attn, rate, *options.dropout_rng);
  Var h1 = ops::layer_norm(ops::add(x, attn), p(li.attn_norm_gain), p(li.attn_norm_bias));

  Var ff = ops::gelu(ops::affine(h1, p(li.ffn_in_w), p(li.ffn_in_b)));
  ff = ops::affine(ff, p(li.ffn_out_w), p(li.ffn_out_b));
  if (rate > 0) ff = ops::dropout(ff, rate, *options.dropout_rng);
  return ops::layer_norm(ops::add(h1, ff), p(li.ffn_norm_gain), p(li.ffn_norm_bias));
}

EncodeResult Model::encode(const Var& embedded, const AttentionMask& mask,
                           const EncodeOptions& options) const {
  const Tensor& e = embedded.value();
  if (e.rank() != 2 || e.cols() != config_.model_dim) {
    throw ShapeError("encode expects [S x " + std::to_string(config_.model_dim) + "], got " +
                     shape_string(e.shape()));
  }
  if (mask.size() != e.rows()) {
    throw ShapeError("attention mask is " + std::to_string(mask.size()) + "x" +
                     std::to_string(mask.size()) + " for a sequence of " + std::to_string(e.rows()));
  }
  const Tensor bias = mask.additive_bias();
  EncodeResult result;
  result.layers.reserve(layers_.size() + 1);
  result.layers.push_back(embedded);
  for (const auto& li : layers_) {
    std::vector<Tensor>* attn = nullptr;
    if (options.keep_attention) attn = &result.attention.emplace_back();
    result.layers.push_back(layer_forward(li, result.layers.back(), bias, options, attn));
  }
  return result;
}

Var Model::decode_logits(const Var& hidden) const {
  auto p = [this](std::size_t i) { return params_[i].var(); };
  Var t = ops::gelu(ops::affine(hidden, p(head_w_), p(head_b_)));
  t = ops::layer_norm(t, p(head_norm_gain_), p(head_norm_bias_));
  return ops::add_bias(ops::matmul_nt(t, p(token_embedding_)), p(output_bias_));
}

Tensor Model::decode_logits(std::span<const Scalar> hidden) const {
  if (hidden.size() != config_.model_dim) throw ShapeError("decode_logits expects a model_dim vector");
  Tensor h({1, hidden.size()}, std::vector<Scalar>(hidden.begin(), hidden.end()));
  return decode_logits(ops::constant(std::move(h))).value().reshaped({config_.vocab_size});
}

std::uint64_t parameter_checksum(const ParameterStore& params, ParamGroup group) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params) {
    if (p.group() != group) continue;
    for (Scalar v : p.value().values()) {
      unsigned char bytes[sizeof(Scalar)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace maskgen
