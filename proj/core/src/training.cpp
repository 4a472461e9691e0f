#include "maskgen/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "maskgen/errors.hpp"
#include "maskgen/generation.hpp"
#include "maskgen/ops.hpp"

namespace maskgen {
namespace {

constexpr std::uint64_t kShuffleStream = 30;
constexpr std::uint64_t kProjectionStream = 31;
constexpr std::uint64_t kDropoutStream = 32;

bool same_architecture(ModelConfig a, ModelConfig b) {
  a.dropout = b.dropout = 0;
  return a == b;
}

}  // namespace

const char* stage_name(TrainingStage stage) {
  switch (stage) {
    case TrainingStage::kCaptionOnly: return "1";
    case TrainingStage::kImageOnly: return "2";
    case TrainingStage::kImageOnlyUnfrozen: return "2u";
    case TrainingStage::kJoint: return "3";
    case TrainingStage::kJointFromScratch: return "3scratch";
  }
  return "?";
}

TrainingStage parse_stage(const std::string& name) {
  if (name == "1") return TrainingStage::kCaptionOnly;
  if (name == "2") return TrainingStage::kImageOnly;
  if (name == "2u") return TrainingStage::kImageOnlyUnfrozen;
  if (name == "3") return TrainingStage::kJoint;
  if (name == "3scratch") return TrainingStage::kJointFromScratch;
  throw ConfigError("unknown stage '" + name + "' (expected 1, 2, 2u, 3 or 3scratch)");
}

InputMode stage_input_mode(TrainingStage stage) {
  switch (stage) {
    case TrainingStage::kCaptionOnly: return InputMode::kCaptionOnly;
    case TrainingStage::kImageOnly:
    case TrainingStage::kImageOnlyUnfrozen: return InputMode::kImageOnly;
    case TrainingStage::kJoint:
    case TrainingStage::kJointFromScratch: return InputMode::kImagePlusCaption;
  }
  return InputMode::kCaptionOnly;
}

std::vector<TrainingExample> expand_examples(const Dataset& data, InputMode mode,
                                             const Vocabulary& vocab, const ModelConfig& config) {
  const bool needs_images = mode != InputMode::kCaptionOnly;
  if (needs_images && !data.has_images()) {
    throw ValidationError(std::string("input mode ") + to_string(mode) + " needs region features");
  }
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const CorpusItem& item = data.items[i];
    TokenSeq caption = encode_text(item.caption, vocab);
    if (caption.size() > config.max_caption_length) caption.resize(config.max_caption_length);
    const VisualSequence* visual = needs_images ? &data.images[i] : nullptr;
    const AssembledInput input =
        assemble_input(mode, visual, caption, config.max_caption_length, vocab.specials());
    for (const auto& q : item.questions) {
      TokenSeq target = encode_text(q, vocab);
      if (target.size() > config.max_question_length) target.resize(config.max_question_length);
      out.push_back({item.id, input, std::move(target)});
    }
  }
  return out;
}

std::vector<Batch> make_batches(std::span<const TrainingExample> examples, std::size_t batch_size,
                                std::uint64_t seed, std::size_t epoch) {
  if (examples.empty()) throw ValidationError("cannot batch an empty corpus");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(derive_seed(seed, kShuffleStream), epoch));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    const std::size_t stop = std::min(order.size(), start + batch_size);
    for (std::size_t k = start; k < stop; ++k) b.examples.push_back(examples[order[k]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

TeacherForced teacher_forced(const Model& model, const TrainingExample& example, Rng* dropout_rng) {
  const SpecialTokens specials{};
  const std::size_t n = example.input.size();
  const std::size_t t = example.target.size();
  const std::size_t first = example.input.positions.empty() ? 0 : example.input.positions.back() + 1;
  if (first + t >= model.config().max_positions) {
    throw PositionOverflowError("example " + example.item_id + " needs " + std::to_string(first + t + 1) +
                                " positions, model has " + std::to_string(model.config().max_positions));
  }

  TokenSeq appended = example.target;
  std::vector<std::size_t> positions;
  for (std::size_t j = 0; j < t; ++j) positions.push_back(first + j);
  for (std::size_t k = 0; k <= t; ++k) {
    appended.push_back(specials.mask);
    positions.push_back(first + k);
  }
  const AssembledInput full = append_tokens(example.input, appended, positions);
  const AttentionMask mask = build_teacher_forcing_mask(n, t);

  EncodeOptions options;
  options.dropout_rng = dropout_rng;
  const EncodeResult enc = model.encode(model.embed_sequence(full), mask, options);

  std::vector<std::size_t> query_rows(t + 1);
  std::iota(query_rows.begin(), query_rows.end(), n + t);
  Var logits = model.decode_logits(ops::select_rows(enc.layers.back(), query_rows));

  TeacherForced out;
  out.targets = example.target;
  out.targets.push_back(specials.eos);
  out.loss = ops::cross_entropy(logits, out.targets, specials.pad);
  out.logits = logits.value();
  return out;
}

Scalar stage_loss(const Model& model, const Batch& batch) {
  Scalar total = 0;
  std::size_t tokens = 0;
  for (const auto& ex : batch.examples) {
    const TeacherForced tf = teacher_forced(model, ex);
    total += tf.loss.value()[0] * static_cast<Scalar>(tf.targets.size());
    tokens += tf.targets.size();
  }
  if (tokens == 0) throw EmptyLossError("batch has no target tokens");
  return total / static_cast<Scalar>(tokens);
}

Scalar accumulate_gradients(Model& model, const Batch& batch, Rng* dropout_rng) {
  std::size_t tokens = 0;
  for (const auto& ex : batch.examples) tokens += ex.target.size() + 1;
  if (tokens == 0) throw EmptyLossError("batch has no target tokens");
  Scalar total = 0;
  for (const auto& ex : batch.examples) {
    const TeacherForced tf = teacher_forced(model, ex, dropout_rng);
    const Scalar weight = static_cast<Scalar>(tf.targets.size()) / static_cast<Scalar>(tokens);
    total += tf.loss.value()[0] * weight;
    backward(ops::scale(tf.loss, weight));
  }
  return total;
}

Scalar teacher_forced_accuracy(const Model& model, std::span<const TrainingExample> examples) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& ex : examples) {
    const TeacherForced tf = teacher_forced(model, ex);
    for (std::size_t i = 0; i < tf.targets.size(); ++i) {
      correct += argmax_token(tf.logits.row(i)) == tf.targets[i];
      ++total;
    }
  }
  return total ? static_cast<Scalar>(correct) / static_cast<Scalar>(total) : 0.0;
}

KeyValues to_key_values(const StagePlan& p) {
  KeyValues kv = to_key_values(p.model_config);
  kv["epochs"] = std::to_string(p.epochs);
  kv["batch_size"] = std::to_string(p.batch_size);
  kv["max_steps"] = std::to_string(p.max_steps);
  kv["clip_norm"] = format_real_value(p.clip_norm);
  kv["base_lr"] = format_real_value(p.adam.base_lr);
  kv["warmup_fraction"] = format_real_value(p.adam.warmup_fraction);
  kv["beta1"] = format_real_value(p.adam.beta1);
  kv["beta2"] = format_real_value(p.adam.beta2);
  kv["epsilon"] = format_real_value(p.adam.epsilon);
  return kv;
}

bool apply_key_value(StagePlan& p, const std::string& key, const std::string& value) {
  if (key == "epochs") p.epochs = parse_size_value(key, value);
  else if (key == "batch_size") p.batch_size = parse_size_value(key, value);
  else if (key == "max_steps") p.max_steps = parse_size_value(key, value);
  else if (key == "clip_norm") p.clip_norm = parse_real_value(key, value);
  else if (key == "base_lr") p.adam.base_lr = parse_real_value(key, value);
  else if (key == "warmup_fraction") p.adam.warmup_fraction = parse_real_value(key, value);
  else if (key == "beta1") p.adam.beta1 = parse_real_value(key, value);
  else if (key == "beta2") p.adam.beta2 = parse_real_value(key, value);
  else if (key == "epsilon") p.adam.epsilon = parse_real_value(key, value);
  else return apply_key_value(p.model_config, key, value);
  return true;
}

std::string format_log_record(const LogRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "step=%llu stage=%s lr=%.9e loss=%.9f",
                static_cast<unsigned long long>(r.step), stage_name(r.stage), r.lr, r.loss);
  return buf;
}

Model prepare_stage_model(const StagePlan& plan) {
  const ModelConfig& cfg = plan.model_config;
  cfg.validate();
  auto check_init = [&](const Model* m, const char* which) {
    if (!same_architecture(m->config(), cfg)) {
      throw DataError(std::string(which) + " checkpoint does not match the model configuration");
    }
  };
  const std::string name = stage_name(plan.stage);
  switch (plan.stage) {
    case TrainingStage::kCaptionOnly:
    case TrainingStage::kJointFromScratch: {
      if (plan.stage1 || plan.stage2) {
        throw PrerequisiteError("stage " + name + " starts from fresh parameters and takes no checkpoints");
      }
      Model model = Model::init(cfg, plan.seed);
      if (plan.stage == TrainingStage::kCaptionOnly) model.params().set_trainable(ParamGroup::kProjection, false);
      return model;
    }
    case TrainingStage::kImageOnly:
    case TrainingStage::kImageOnlyUnfrozen: {
      if (!plan.stage1) throw PrerequisiteError("stage " + name + " requires a stage 1 checkpoint");
      if (plan.stage2) throw PrerequisiteError("stage " + name + " does not take a stage 2 checkpoint");
      check_init(plan.stage1, "stage 1");
      Model model = *plan.stage1;
      model.set_dropout(cfg.dropout);
      model.params().set_trainable(ParamGroup::kBackbone, plan.stage == TrainingStage::kImageOnlyUnfrozen);
      model.params().set_trainable(ParamGroup::kProjection, true);
      model.reinit_projection(derive_seed(plan.seed, kProjectionStream));
      return model;
    }
    case TrainingStage::kJoint: {
      if (!plan.stage1) throw PrerequisiteError("stage 3 requires a stage 1 checkpoint");
      if (!plan.stage2) throw PrerequisiteError("stage 3 requires a stage 2 checkpoint");
      check_init(plan.stage1, "stage 1");
      check_init(plan.stage2, "stage 2");
      Model model = *plan.stage1;
      model.set_dropout(cfg.dropout);
      model.projection_weight().mutable_value() = plan.stage2->projection_weight().value();
      model.projection_bias().mutable_value() = plan.stage2->projection_bias().value();
      model.params().set_trainable(ParamGroup::kBackbone, true);
      model.params().set_trainable(ParamGroup::kProjection, true);
      return model;
    }
  }
  throw ConfigError("unknown stage");
}

StageResult run_stage(const StagePlan& plan, const Dataset& data, const Vocabulary& vocab,
                      const std::function<void(const LogRecord&)>& on_step) {
  if (plan.model_config.vocab_size != vocab.size()) {
    throw DataError("model vocab_size " + std::to_string(plan.model_config.vocab_size) +
                    " does not match the corpus vocabulary of " + std::to_string(vocab.size()));
  }
  StageResult result{prepare_stage_model(plan), {}};
  Model& model = result.model;

  const std::vector<TrainingExample> examples =
      expand_examples(data, stage_input_mode(plan.stage), vocab, model.config());
  const std::size_t per_epoch = (examples.size() + plan.batch_size - 1) / std::max<std::size_t>(plan.batch_size, 1);
  std::size_t total = plan.epochs * per_epoch;
  if (plan.max_steps > 0) total = std::min(total, plan.max_steps);
  if (total == 0) throw ConfigError("training plan has no steps");

  OptimizerState state;
  state.config = plan.adam;
  state.config.total_steps = total;
  std::optional<Rng> dropout;
  if (model.config().dropout > 0) dropout.emplace(derive_seed(plan.seed, kDropoutStream));

  std::size_t step = 0;
  for (std::size_t epoch = 0; step < total; ++epoch) {
    for (const Batch& batch : make_batches(examples, plan.batch_size, plan.seed, epoch)) {
      if (step >= total) break;
      model.params().zero_grad();
      const Scalar loss = accumulate_gradients(model, batch, dropout ? &*dropout : nullptr);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(step + 1) + " of stage " +
                           stage_name(plan.stage) + " (batch of " + std::to_string(batch.examples.size()) +
                           " examples, first item " + batch.examples.front().item_id + ")");
      }
      clip_grad_norm(model.params(), plan.clip_norm);
      adam_step(model.params(), state);
      ++step;
      LogRecord record{state.step, plan.stage, lr_schedule(state.config, state.step), loss};
      result.log.push_back(record);
      if (on_step) on_step(record);
    }
  }
  for (auto& p : model.params()) {
    if (!p.value().all_finite()) throw NumericError("parameter " + p.id() + " became non-finite");
  }
  return result;
}

}  // namespace maskgen
