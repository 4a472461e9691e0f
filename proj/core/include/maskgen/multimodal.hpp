#pragma once

#include <array>
#include <span>
#include <vector>

#include "maskgen/tensor.hpp"
#include "maskgen/types.hpp"

namespace maskgen {

// One detected region: its feature vector, its box normalized by image
// width/height as (x0, y0, x1, y1), and the detector score used for ordering.
struct ObjectRegion {
  std::vector<Scalar> features;
  std::array<Scalar, 4> box{};
  Scalar relevance = 0;

  friend bool operator==(const ObjectRegion&, const ObjectRegion&) = default;
};

// Throws DimensionError / ValidationError if the region is malformed.
void validate_region(const ObjectRegion& region, std::size_t feature_dim);

// Regions of one image, ordered by non-increasing relevance.
class VisualSequence {
 public:
  VisualSequence() = default;
  // Takes regions already in order; throws ValidationError otherwise.
  explicit VisualSequence(std::vector<ObjectRegion> regions);
  // Sorts by relevance, ties kept in original order.
  static VisualSequence from_unordered(std::vector<ObjectRegion> regions);

  const std::vector<ObjectRegion>& regions() const noexcept { return regions_; }
  std::size_t size() const noexcept { return regions_.size(); }
  bool empty() const noexcept { return regions_.empty(); }
  std::size_t feature_dim() const { return regions_.empty() ? 0 : regions_.front().features.size(); }

  friend bool operator==(const VisualSequence&, const VisualSequence&) = default;

 private:
  std::vector<ObjectRegion> regions_;
};

// Features followed by box: a vector of length feature_dim + 4.
std::vector<Scalar> object_embedding(const ObjectRegion& region);
// Stacked object embeddings, one row per region.
Tensor object_embeddings(const VisualSequence& visual);

// Linear map from object embeddings into the model's embedding space.
struct CrossModalProjection {
  Tensor weight;  // [(feature_dim + 4) x model_dim]
  Tensor bias;    // [model_dim]
};

// weight^T . o + bias
Tensor project_region(std::span<const Scalar> object, const CrossModalProjection& projection);

enum class InputMode {
  kCaptionOnly,
  kImageOnly,
  kImagePlusCaption,
};

const char* to_string(InputMode mode);

enum class SlotKind { kToken, kRegion };

struct Slot {
  SlotKind kind = SlotKind::kToken;
  TokenId token = kNoToken;  // valid for kToken
  std::size_t region = 0;    // row of AssembledInput::regions for kRegion

  friend bool operator==(const Slot&, const Slot&) = default;
};

struct SlotSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const SlotSpan&, const SlotSpan&) = default;
};

// A model input: token slots and region slots in sequence order. Region slots
// refer to rows of `regions`, which hold raw object embeddings; the model
// projects them when it embeds the sequence.
struct AssembledInput {
  InputMode mode = InputMode::kCaptionOnly;
  std::vector<Slot> slots;
  std::vector<std::size_t> positions;
  Tensor regions;
  SlotSpan visual_span;
  SlotSpan text_span;

  std::size_t size() const { return slots.size(); }
};

// Layouts:
//   caption_only        [CLS] txt_1 .. txt_M
//   image_only          [CLS] img_1 .. img_N
//   image_plus_caption  [CLS] img_1 .. img_N [SEP] txt_1 .. txt_M
// Positions run 0..S-1. Throws ValidationError on a missing modality or a
// caption longer than max_caption_length.
AssembledInput assemble_input(InputMode mode, const VisualSequence* visual,
                              std::span<const TokenId> caption,
                              std::size_t max_caption_length,
                              const SpecialTokens& specials = {});

// Appends token slots at the given positions (used for target tokens and the
// [MASK] query slot).
AssembledInput append_tokens(const AssembledInput& input, std::span<const TokenId> tokens,
                             std::span<const std::size_t> positions);

}  // namespace maskgen
