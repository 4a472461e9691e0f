#include "maskgen/attention_mask.hpp"

#include "maskgen/errors.hpp"

namespace maskgen {

AttentionMask::AttentionMask(std::size_t size, std::size_t n_input)
    : size_(size), n_input_(n_input), allow_(size * size, 0) {
  if (n_input > size) throw ShapeError("attention mask input count exceeds its size");
}

Tensor AttentionMask::additive_bias() const {
  Tensor out({size_, size_});
  for (std::size_t k = 0; k < allow_.size(); ++k) out[k] = allow_[k] ? 0.0 : kMaskedLogit;
  return out;
}

AttentionMask build_left_to_right_mask(std::size_t n_input, std::size_t n_target) {
  if (n_input == 0) throw ShapeError("left-to-right mask needs at least one input slot");
  const std::size_t size = n_input + n_target;
  AttentionMask mask(size, n_input);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t last = i < n_input ? n_input : i + 1;
    for (std::size_t j = 0; j < last; ++j) mask.set(i, j, true);
  }
  return mask;
}

AttentionMask build_teacher_forcing_mask(std::size_t n_input, std::size_t n_target) {
  if (n_input == 0) throw ShapeError("teacher-forcing mask needs at least one input slot");
  const std::size_t size = n_input + 2 * n_target + 1;
  AttentionMask mask(size, n_input);
  for (std::size_t i = 0; i < n_input; ++i) {
    for (std::size_t j = 0; j < n_input; ++j) mask.set(i, j, true);
  }
  for (std::size_t t = 0; t < n_target; ++t) {
    const std::size_t row = n_input + t;
    for (std::size_t j = 0; j <= row; ++j) mask.set(row, j, true);
  }
  for (std::size_t k = 0; k <= n_target; ++k) {
    const std::size_t row = n_input + n_target + k;
    for (std::size_t j = 0; j < n_input + k; ++j) mask.set(row, j, true);
    mask.set(row, row, true);
  }
  return mask;
}

}  // namespace maskgen
