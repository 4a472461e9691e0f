#pragma once

#include <span>
#include <vector>

#include "maskgen/attention_mask.hpp"
#include "maskgen/model.hpp"

namespace maskgen {

struct GenerationConfig {
  std::size_t max_length = 24;
  SpecialTokens specials{};
  bool keep_logits = false;
};

struct GenerationOutput {
  TokenSeq tokens;                   // [EOS] excluded
  std::vector<Tensor> step_logits;   // one [V] tensor per step when kept
  bool truncated = false;            // stopped at max_length without [EOS]
};

struct NextToken {
  TokenId token = kNoToken;
  Tensor logits;  // [V], raw
};

// Argmax over ids that may appear in a question: [PAD], [CLS], [SEP] and
// [MASK] are never chosen. Ties go to the lowest id.
TokenId argmax_token(std::span<const Scalar> logits, const SpecialTokens& specials = {});

// Encodes X + prefix + [MASK] under build_left_to_right_mask(|X|, |prefix|+1)
// and decodes the [MASK] slot. Throws PositionOverflowError if the sequence
// does not fit the model's positions.
NextToken next_token(const Model& model, const AssembledInput& input,
                     std::span<const TokenId> prefix, const SpecialTokens& specials = {});

// Greedy decoding until [EOS] or max_length.
GenerationOutput generate(const Model& model, const AssembledInput& input,
                          const GenerationConfig& config = {});

}  // namespace maskgen
