#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace maskgen {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kNoToken = -1;

// Reserved ids; every vocabulary places them first, in this order.
struct SpecialTokens {
  TokenId pad = 0;
  TokenId unk = 1;
  TokenId cls = 2;
  TokenId sep = 3;
  TokenId mask = 4;
  TokenId eos = 5;

  static constexpr std::size_t kCount = 6;
};

}  // namespace maskgen
