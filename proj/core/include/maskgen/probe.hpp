#pragma once

#include <string>
#include <utility>
#include <vector>

#include "maskgen/model.hpp"

namespace maskgen {

struct ProbePair {
  VisualSequence visual;
  TokenSeq caption;
};

struct ProbeReport {
  std::string label;
  std::vector<Scalar> xsim;  // xsim[l-1] for layer l = 1..L
  std::size_t items = 0;
};

// Cosine of two vectors; 0 when either has zero norm.
Scalar cosine(std::span<const Scalar> a, std::span<const Scalar> b);

// Per-layer mean cosine between the [CLS] vectors of the image-only and the
// caption-only encodings of each pair. Each modality is encoded on its own
// with full attention. Throws ValidationError on an empty set.
ProbeReport xsim_per_layer(const Model& model, std::span<const ProbePair> pairs,
                           const std::string& label, const SpecialTokens& specials = {});

struct AttentionSummary {
  std::vector<Scalar> weights;  // one per input slot
  std::size_t argmax = 0;
};

// Averages heads[h](row, j) over heads and the given query rows, for the
// first n_input columns.
AttentionSummary summarize_attention(const std::vector<Tensor>& heads, std::size_t n_input,
                                     std::span<const std::size_t> query_rows);

// Re-encodes X + generated under the left-to-right mask and summarizes the
// last layer's attention from the generated-token rows onto X. Throws
// ValidationError if nothing was generated.
AttentionSummary attention_summary(const Model& model, const AssembledInput& input,
                                   std::span<const TokenId> generated);

// "layer_index,model_label,xsim" with one line per layer and report.
std::string format_probe_table(std::span<const ProbeReport> reports);

}  // namespace maskgen
