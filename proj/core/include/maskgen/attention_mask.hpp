#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "maskgen/tensor.hpp"

namespace maskgen {

// Boolean allow-matrix over an S-slot sequence: allowed(i, j) means query
// slot i may attend to key slot j.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t size, std::size_t n_input);

  std::size_t size() const noexcept { return size_; }
  std::size_t n_input() const noexcept { return n_input_; }

  bool allowed(std::size_t i, std::size_t j) const { return allow_[i * size_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool allow) { allow_[i * size_ + j] = allow ? 1 : 0; }

  // 0 where allowed, kMaskedLogit elsewhere.
  Tensor additive_bias() const;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  std::size_t size_ = 0;
  std::size_t n_input_ = 0;
  std::vector<std::uint8_t> allow_;
};

inline constexpr Scalar kMaskedLogit = -1e9;

// Input rows (i < n_input) see exactly the input columns; target rows see the
// input columns plus targets up to and including themselves.
AttentionMask build_left_to_right_mask(std::size_t n_input, std::size_t n_target);

// Single-pass layout for teacher forcing over T target tokens:
//   X (n_input slots), y_1..y_T, [MASK]_1..[MASK]_{T+1}
// y_j sees X and y_1..y_j. [MASK]_k sees X, y_1..y_{k-1} and itself, which
// is exactly the view of the query slot at generation step k.
AttentionMask build_teacher_forcing_mask(std::size_t n_input, std::size_t n_target);

}  // namespace maskgen
