#include "maskgen/generation.hpp"

#include "maskgen/errors.hpp"
#include "maskgen/ops.hpp"

namespace maskgen {

TokenId argmax_token(std::span<const Scalar> logits, const SpecialTokens& specials) {
  TokenId best = kNoToken;
  Scalar best_value = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (id == specials.pad || id == specials.cls || id == specials.sep || id == specials.mask) continue;
    if (best == kNoToken || logits[i] > best_value) {
      best = id;
      best_value = logits[i];
    }
  }
  if (best == kNoToken) throw ShapeError("argmax over an empty candidate set");
  return best;
}

NextToken next_token(const Model& model, const AssembledInput& input,
                     std::span<const TokenId> prefix, const SpecialTokens& specials) {
  const std::size_t n = input.size();
  const std::size_t total = n + prefix.size() + 1;
  if (total > model.config().max_positions) {
    throw PositionOverflowError("sequence of " + std::to_string(total) +
                                " slots exceeds max_positions " +
                                std::to_string(model.config().max_positions));
  }
  TokenSeq appended(prefix.begin(), prefix.end());
  appended.push_back(specials.mask);
  std::vector<std::size_t> positions(appended.size());
  const std::size_t first = input.positions.empty() ? 0 : input.positions.back() + 1;
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = first + i;

  const AssembledInput full = append_tokens(input, appended, positions);
  const AttentionMask mask = build_left_to_right_mask(n, appended.size());
  const EncodeResult enc = model.encode(model.embed_sequence(full), mask);
  const auto last = enc.layers.back().value().row(total - 1);
  NextToken out;
  out.logits = model.decode_logits(last);
  out.token = argmax_token(out.logits.values(), specials);
  return out;
}

GenerationOutput generate(const Model& model, const AssembledInput& input,
                          const GenerationConfig& config) {
  if (config.max_length == 0) throw ConfigError("generation max_length must be at least 1");
  GenerationOutput out;
  TokenSeq prefix;
  while (true) {
    NextToken step = next_token(model, input, prefix, config.specials);
    if (config.keep_logits) out.step_logits.push_back(std::move(step.logits));
    if (step.token == config.specials.eos) break;
    out.tokens.push_back(step.token);
    prefix.push_back(step.token);
    if (out.tokens.size() >= config.max_length) {
      out.truncated = true;
      break;
    }
  }
  return out;
}

}  // namespace maskgen
