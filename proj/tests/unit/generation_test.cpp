#include <doctest.h>

#include "maskgen/errors.hpp"
#include "maskgen/generation.hpp"
#include "oracles.hpp"

using namespace maskgen;

namespace {

struct Rig {
  Model model;
  AssembledInput input;
};

Rig rigged(TokenId favourite, Scalar margin = 100.0) {
  const ModelConfig cfg = oracle::tiny_config();
  Rig r{Model::init(cfg, 2), {}};
  r.model.output_bias().mutable_value()[static_cast<std::size_t>(favourite)] = margin;
  const std::vector<TokenId> caption = {7, 8};
  r.input = assemble_input(InputMode::kCaptionOnly, nullptr, caption, cfg.max_caption_length);
  return r;
}

}  // namespace

TEST_CASE("argmax skips structural specials and breaks ties low") {
  const SpecialTokens sp;
  std::vector<Scalar> logits(10, 0.0);
  logits[static_cast<std::size_t>(sp.mask)] = 9;
  logits[static_cast<std::size_t>(sp.cls)] = 9;
  logits[7] = 3;
  logits[8] = 3;
  CHECK(argmax_token(logits) == 7);
  std::fill(logits.begin(), logits.end(), 0.0);
  CHECK(argmax_token(logits) == sp.unk);
  logits[static_cast<std::size_t>(sp.eos)] = 1;
  CHECK(argmax_token(logits) == sp.eos);
}

TEST_CASE("rigged head emitting [EOS] stops immediately") {
  Rig r = rigged(SpecialTokens{}.eos);
  const auto out = generate(r.model, r.input);
  CHECK(out.tokens.empty());
  CHECK_FALSE(out.truncated);
}

TEST_CASE("rigged head repeating a token stops at max_length") {
  Rig r = rigged(9);
  GenerationConfig gc;
  gc.max_length = 5;
  gc.keep_logits = true;
  const auto out = generate(r.model, r.input, gc);
  CHECK(out.tokens == TokenSeq(5, 9));
  CHECK(out.truncated);
  CHECK(out.step_logits.size() == 5);
}

TEST_CASE("rigged [MASK] preference is never emitted") {
  Rig r = rigged(SpecialTokens{}.mask, 1000.0);
  r.model.output_bias().mutable_value()[SpecialTokens{}.eos] = 50.0;
  CHECK(generate(r.model, r.input).tokens.empty());
}

TEST_CASE("generation overflow and config errors") {
  ModelConfig cfg = oracle::tiny_config();
  cfg.max_positions = 14;
  cfg.max_caption_length = 6;
  cfg.max_question_length = 3;
  Model model = Model::init(cfg, 1);
  model.output_bias().mutable_value()[9] = 100;
  const std::vector<TokenId> caption = {7, 8, 7, 8};
  const auto input = assemble_input(InputMode::kCaptionOnly, nullptr, caption, 6);
  GenerationConfig gc;
  gc.max_length = 20;
  CHECK_THROWS_AS(generate(model, input, gc), PositionOverflowError);
  gc.max_length = 0;
  CHECK_THROWS_AS(generate(model, input, gc), ConfigError);
}

TEST_CASE("step logits equal independent single-shot and teacher-forced passes") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = oracle::incremental_consistency(seed);
    CAPTURE(seed);
    CHECK(c.steps >= 1);
    CHECK(c.vs_reference < 1e-9);
    CHECK(c.vs_teacher_forcing < 1e-9);
  }
}

TEST_CASE("product of step probabilities equals the teacher-forced likelihood") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CAPTURE(seed);
    CHECK(oracle::sequence_probability_gap(seed) < 1e-6);
  }
}
