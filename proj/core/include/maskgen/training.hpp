#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskgen/corpus.hpp"
#include "maskgen/model.hpp"
#include "maskgen/optimizer.hpp"

namespace maskgen {

enum class TrainingStage {
  kCaptionOnly,         // "1": caption input, backbone trained, projection untouched
  kImageOnly,           // "2": image input, projection only, backbone frozen
  kImageOnlyUnfrozen,   // "2u": image input, everything trained
  kJoint,               // "3": image + caption, everything trained, from stages 1 and 2
  kJointFromScratch,    // "3scratch": image + caption, everything trained, fresh init
};

const char* stage_name(TrainingStage stage);
// Accepts the short names "1", "2", "2u", "3", "3scratch".
TrainingStage parse_stage(const std::string& name);
InputMode stage_input_mode(TrainingStage stage);

struct TrainingExample {
  std::string item_id;
  AssembledInput input;
  TokenSeq target;  // question tokens, [EOS] not included
};

struct Batch {
  std::vector<TrainingExample> examples;
};

// One example per (item, question) pair. Captions longer than the model's
// max_caption_length and questions longer than max_question_length are cut.
std::vector<TrainingExample> expand_examples(const Dataset& data, InputMode mode,
                                             const Vocabulary& vocab, const ModelConfig& config);

// Examples shuffled by (seed, epoch) and cut into batches; the last batch may
// be short. Throws ValidationError on an empty example list.
std::vector<Batch> make_batches(std::span<const TrainingExample> examples, std::size_t batch_size,
                                std::uint64_t seed, std::size_t epoch);

struct TeacherForced {
  Var loss;          // mean NLL over the T+1 target slots
  Tensor logits;     // [(T+1) x V]
  TokenSeq targets;  // y_1..y_T, [EOS]
};

// One forward pass over X, y_1..y_T, [MASK]_1..[MASK]_{T+1} under
// build_teacher_forcing_mask; slot [MASK]_k predicts y_k (y_{T+1} = [EOS]).
TeacherForced teacher_forced(const Model& model, const TrainingExample& example,
                             Rng* dropout_rng = nullptr);

// Mean token NLL over every target slot in the batch (no gradients).
Scalar stage_loss(const Model& model, const Batch& batch);

// Adds d(stage_loss)/d(params) into the trainable parameters' gradients and
// returns the loss.
Scalar accumulate_gradients(Model& model, const Batch& batch, Rng* dropout_rng);

// Fraction of target slots whose argmax equals the target.
Scalar teacher_forced_accuracy(const Model& model, std::span<const TrainingExample> examples);

struct StagePlan {
  TrainingStage stage = TrainingStage::kCaptionOnly;
  ModelConfig model_config;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  // 0 means epochs * batches-per-epoch.
  std::size_t max_steps = 0;
  AdamConfig adam{};
  Scalar clip_norm = 1.0;
  std::uint64_t seed = 1;
  // Required by stages 2, 2u (stage1) and 3 (stage1 + stage2); forbidden by
  // 1 and 3scratch.
  const Model* stage1 = nullptr;
  const Model* stage2 = nullptr;
};

// Training fields as key=value: epochs, batch_size, max_steps, clip_norm,
// base_lr, warmup_fraction, beta1, beta2, epsilon. Together with the
// ModelConfig keys these make up the config file.
KeyValues to_key_values(const StagePlan& plan);
// Applies a training or model key; returns false for unknown keys.
bool apply_key_value(StagePlan& plan, const std::string& key, const std::string& value);

struct LogRecord {
  std::uint64_t step = 0;
  TrainingStage stage = TrainingStage::kCaptionOnly;
  Scalar lr = 0;
  Scalar loss = 0;
};

// "step=<n> stage=<name> lr=<%.9e> loss=<%.9f>"
std::string format_log_record(const LogRecord& record);

struct StageResult {
  Model model;
  std::vector<LogRecord> log;
};

// Builds the initial model for a stage and sets its trainable set. Throws
// PrerequisiteError when required checkpoints are missing or forbidden ones
// are given.
Model prepare_stage_model(const StagePlan& plan);

// Trains one stage. Throws NumericError if the loss stops being finite.
StageResult run_stage(const StagePlan& plan, const Dataset& data, const Vocabulary& vocab,
                      const std::function<void(const LogRecord&)>& on_step = {});

}  // namespace maskgen
