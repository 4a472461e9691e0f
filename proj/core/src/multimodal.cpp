#include "maskgen/multimodal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maskgen/errors.hpp"

namespace maskgen {

void validate_region(const ObjectRegion& region, std::size_t feature_dim) {
  if (region.features.size() != feature_dim) {
    throw DimensionError("region has " + std::to_string(region.features.size()) +
                         " features, expected " + std::to_string(feature_dim));
  }
  for (Scalar b : region.box) {
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("region box coordinate outside [0, 1]");
  }
  for (Scalar f : region.features) {
    if (!std::isfinite(f)) throw ValidationError("region feature is not finite");
  }
}

VisualSequence::VisualSequence(std::vector<ObjectRegion> regions) : regions_(std::move(regions)) {
  const std::size_t dim = feature_dim();
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    validate_region(regions_[i], dim);
    if (i > 0 && regions_[i].relevance > regions_[i - 1].relevance) {
      throw ValidationError("regions are not ordered by non-increasing relevance");
    }
  }
}

VisualSequence VisualSequence::from_unordered(std::vector<ObjectRegion> regions) {
  std::stable_sort(regions.begin(), regions.end(),
                   [](const ObjectRegion& a, const ObjectRegion& b) { return a.relevance > b.relevance; });
  return VisualSequence(std::move(regions));
}

std::vector<Scalar> object_embedding(const ObjectRegion& region) {
  std::vector<Scalar> out(region.features);
  out.insert(out.end(), region.box.begin(), region.box.end());
  return out;
}

Tensor object_embeddings(const VisualSequence& visual) {
  const std::size_t width = visual.feature_dim() + 4;
  Tensor out({visual.size(), width});
  for (std::size_t i = 0; i < visual.size(); ++i) {
    const auto o = object_embedding(visual.regions()[i]);
    std::copy(o.begin(), o.end(), out.row(i).begin());
  }
  return out;
}

Tensor project_region(std::span<const Scalar> object, const CrossModalProjection& projection) {
  const Tensor& w = projection.weight;
  if (w.rank() != 2 || w.rows() != object.size() || projection.bias.size() != w.cols()) {
    throw ShapeError("projection " + shape_string(w.shape()) + " cannot map a vector of " +
                     std::to_string(object.size()));
  }
  Tensor out = projection.bias.reshaped({w.cols()});
  for (std::size_t k = 0; k < object.size(); ++k) {
    const Scalar o = object[k];
    if (o == 0) continue;
    auto r = w.row(k);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += o * r[j];
  }
  return out;
}

const char* to_string(InputMode mode) {
  switch (mode) {
    case InputMode::kCaptionOnly: return "caption_only";
    case InputMode::kImageOnly: return "image_only";
    case InputMode::kImagePlusCaption: return "image_plus_caption";
  }
  return "unknown";
}

AssembledInput assemble_input(InputMode mode, const VisualSequence* visual,
                              std::span<const TokenId> caption,
                              std::size_t max_caption_length,
                              const SpecialTokens& specials) {
  const bool wants_image = mode != InputMode::kCaptionOnly;
  const bool wants_text = mode != InputMode::kImageOnly;
  if (wants_image && (visual == nullptr || visual->empty())) {
    throw ValidationError(std::string("input mode ") + to_string(mode) + " needs image regions");
  }
  if (wants_text && caption.size() > max_caption_length) {
    throw ValidationError("caption of " + std::to_string(caption.size()) +
                          " tokens exceeds the maximum of " + std::to_string(max_caption_length));
  }

  AssembledInput in;
  in.mode = mode;
  in.slots.push_back({SlotKind::kToken, specials.cls, 0});
  if (wants_image) {
    in.regions = object_embeddings(*visual);
    in.visual_span.begin = in.slots.size();
    for (std::size_t j = 0; j < visual->size(); ++j) in.slots.push_back({SlotKind::kRegion, kNoToken, j});
    in.visual_span.end = in.slots.size();
  }
  if (mode == InputMode::kImagePlusCaption) in.slots.push_back({SlotKind::kToken, specials.sep, 0});
  in.text_span.begin = in.text_span.end = in.slots.size();
  if (wants_text) {
    for (TokenId t : caption) in.slots.push_back({SlotKind::kToken, t, 0});
    in.text_span.end = in.slots.size();
  }
  in.positions.resize(in.slots.size());
  std::iota(in.positions.begin(), in.positions.end(), std::size_t{0});
  return in;
}

AssembledInput append_tokens(const AssembledInput& input, std::span<const TokenId> tokens,
                             std::span<const std::size_t> positions) {
  if (tokens.size() != positions.size()) throw ShapeError("append_tokens: tokens/positions mismatch");
  AssembledInput out = input;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.slots.push_back({SlotKind::kToken, tokens[i], 0});
    out.positions.push_back(positions[i]);
  }
  return out;
}

}  // namespace maskgen
