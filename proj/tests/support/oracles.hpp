#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's numeric kernels.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "maskgen/attention_mask.hpp"
#include "maskgen/autograd.hpp"
#include "maskgen/metrics.hpp"
#include "maskgen/model.hpp"
#include "maskgen/random.hpp"

namespace oracle {

using maskgen::Scalar;
using maskgen::Tensor;

Tensor random_tensor(maskgen::Shape shape, maskgen::Rng& rng, Scalar scale = 1.0);
Scalar max_abs_diff(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Scalar gelu_tanh(Scalar x);
Scalar gelu_erf(Scalar x);
std::vector<Scalar> softmax(std::span<const Scalar> x);
std::vector<Scalar> layer_norm(std::span<const Scalar> x, std::span<const Scalar> gain,
                               std::span<const Scalar> bias, Scalar eps);

// allowed(i, j) for the left-to-right mask, written as a predicate.
bool left_to_right_allows(std::size_t n_input, std::size_t i, std::size_t j);

// Loop-only forward pass that reads the model's parameters by name. Masked
// keys are skipped instead of receiving a large negative logit.
class ReferenceEncoder {
 public:
  explicit ReferenceEncoder(const maskgen::Model& model);

  // Final-layer hidden state of every slot.
  std::vector<std::vector<Scalar>> encode(const maskgen::AssembledInput& input,
                                          const maskgen::AttentionMask& mask) const;
  std::vector<Scalar> logits(std::span<const Scalar> hidden) const;

 private:
  std::vector<Scalar> vec(const std::string& id) const;
  const Tensor& mat(const std::string& id) const;

  const maskgen::Model& model_;
};

// Finite differences.
struct GradCheck {
  Scalar max_rel_error = 0;
  std::size_t checked = 0;
};

// f builds a scalar loss from leaf variables that require grad. Every entry of
// every input is perturbed by +/-h; relative error uses max(|a|, |n|, floor).
GradCheck check_gradients(const std::function<maskgen::Var(const std::vector<maskgen::Var>&)>& f,
                          const std::vector<Tensor>& inputs, Scalar h = 1e-6, Scalar floor = 1e-2);

// Brute-force metrics over small corpora.
Scalar bleu(const maskgen::EvalCorpus& corpus, int n);
Scalar rouge_l(const maskgen::EvalCorpus& corpus);
Scalar meteor(const maskgen::EvalCorpus& corpus);
std::vector<Scalar> cider_items(const maskgen::EvalCorpus& corpus);
Scalar cider(const maskgen::EvalCorpus& corpus);

// Random corpus over a tiny vocabulary that includes inflected pairs.
maskgen::EvalCorpus random_corpus(maskgen::Rng& rng, std::size_t max_items, std::size_t max_len);

}  // namespace oracle

namespace oracle {

struct NamedCheck {
  std::string name;
  GradCheck result;
};

// Finite-difference checks of every differentiable op and of the model's
// composite layers (embedding, attention block, decoding head, full
// teacher-forced loss) for one seed.
std::vector<NamedCheck> layer_gradient_suite(std::uint64_t seed);

// A small model configuration for fast tests.
maskgen::ModelConfig tiny_config(std::size_t vocab = 16);

// Random visual sequence with relevance already sorted.
maskgen::VisualSequence random_visual(maskgen::Rng& rng, std::size_t regions, std::size_t feature_dim);
maskgen::TokenSeq random_tokens(maskgen::Rng& rng, std::size_t length, std::size_t vocab);

}  // namespace oracle

namespace oracle {

// Max |generate step logits - reference single-shot [MASK] logits| and
// |generate - teacher-forced [MASK] logits| for one random model and input.
struct IncrementalCheck {
  Scalar vs_reference = 0;
  Scalar vs_teacher_forcing = 0;
  std::size_t steps = 0;
};
IncrementalCheck incremental_consistency(std::uint64_t seed);

// Relative gap between exp(-sum of per-step NLL from independent single-shot
// passes) and exp(-(T+1) * teacher-forced mean NLL) on one random example.
Scalar sequence_probability_gap(std::uint64_t seed);

}  // namespace oracle
