#include "maskgen/probe.hpp"

#include <cmath>
#include <cstdio>

#include "maskgen/errors.hpp"

namespace maskgen {
namespace {

std::vector<Tensor> cls_per_layer(const Model& model, const AssembledInput& input) {
  const AttentionMask mask = build_left_to_right_mask(input.size(), 0);
  const EncodeResult enc = model.encode(model.embed_sequence(input), mask);
  std::vector<Tensor> out;
  for (std::size_t l = 1; l < enc.layers.size(); ++l) {
    const auto row = enc.layers[l].value().row(0);
    out.emplace_back(Shape{row.size()}, std::vector<Scalar>(row.begin(), row.end()));
  }
  return out;
}

}  // namespace

Scalar cosine(std::span<const Scalar> a, std::span<const Scalar> b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors with different lengths");
  Scalar dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

ProbeReport xsim_per_layer(const Model& model, std::span<const ProbePair> pairs,
                           const std::string& label, const SpecialTokens& specials) {
  if (pairs.empty()) throw ValidationError("X_sim needs at least one image/caption pair");
  const std::size_t layers = model.config().num_layers;
  ProbeReport report;
  report.label = label;
  report.items = pairs.size();
  report.xsim.assign(layers, 0.0);
  for (const auto& pair : pairs) {
    const auto image = assemble_input(InputMode::kImageOnly, &pair.visual, {},
                                      model.config().max_caption_length, specials);
    const auto caption = assemble_input(InputMode::kCaptionOnly, nullptr, pair.caption,
                                        model.config().max_caption_length, specials);
    const auto a = cls_per_layer(model, image);
    const auto b = cls_per_layer(model, caption);
    for (std::size_t l = 0; l < layers; ++l) report.xsim[l] += cosine(a[l].values(), b[l].values());
  }
  for (auto& v : report.xsim) v /= static_cast<Scalar>(pairs.size());
  return report;
}

AttentionSummary summarize_attention(const std::vector<Tensor>& heads, std::size_t n_input,
                                     std::span<const std::size_t> query_rows) {
  if (heads.empty() || query_rows.empty()) throw ValidationError("attention summary needs heads and rows");
  AttentionSummary out;
  out.weights.assign(n_input, 0.0);
  for (const auto& h : heads) {
    for (std::size_t r : query_rows) {
      for (std::size_t j = 0; j < n_input; ++j) out.weights[j] += h.at(r, j);
    }
  }
  const auto count = static_cast<Scalar>(heads.size() * query_rows.size());
  for (std::size_t j = 0; j < n_input; ++j) {
    out.weights[j] /= count;
    if (out.weights[j] > out.weights[out.argmax]) out.argmax = j;
  }
  return out;
}

AttentionSummary attention_summary(const Model& model, const AssembledInput& input,
                                   std::span<const TokenId> generated) {
  if (generated.empty()) throw ValidationError("attention summary needs generated tokens");
  const std::size_t n = input.size();
  std::vector<std::size_t> positions(generated.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = n + i;
  const AssembledInput full = append_tokens(input, generated, positions);
  if (full.size() > model.config().max_positions) {
    throw PositionOverflowError("input plus generated tokens exceed max_positions");
  }
  EncodeOptions options;
  options.keep_attention = true;
  const EncodeResult enc =
      model.encode(model.embed_sequence(full), build_left_to_right_mask(n, generated.size()), options);
  std::vector<std::size_t> rows(generated.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = n + i;
  return summarize_attention(enc.attention.back(), n, rows);
}

std::string format_probe_table(std::span<const ProbeReport> reports) {
  std::string out = "layer_index,model_label,xsim\n";
  for (const auto& r : reports) {
    for (std::size_t l = 0; l < r.xsim.size(); ++l) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%zu,%s,%.6f\n", l + 1, r.label.c_str(), r.xsim[l]);
      out += buf;
    }
  }
  return out;
}

}  // namespace maskgen
