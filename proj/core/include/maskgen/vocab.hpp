#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "maskgen/types.hpp"

namespace maskgen {

// Lowercases and splits on whitespace; every punctuation character becomes
// its own token.
std::vector<std::string> tokenize(std::string_view text);

// Word-level vocabulary. Ids 0..5 are the special tokens in the fixed order
// [PAD] [UNK] [CLS] [SEP] [MASK] [EOS].
class Vocabulary {
 public:
  Vocabulary();

  // Words from `texts` after the specials, by decreasing frequency then
  // lexicographically.
  static Vocabulary build(const std::vector<std::string>& texts);
  // Restores a stored vocabulary; throws ValidationError if the specials are
  // not first or a token repeats.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const SpecialTokens& specials() const noexcept { return specials_; }

  // [UNK] for unseen words.
  TokenId id(std::string_view word) const;
  // Throws DataError for ids outside the vocabulary.
  const std::string& token(TokenId id) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  SpecialTokens specials_;
};

const std::vector<std::string>& special_token_strings();

TokenSeq encode_text(std::string_view text, const Vocabulary& vocab);
std::string decode_text(const TokenSeq& ids, const Vocabulary& vocab);
// Tokenize and rejoin with single spaces.
std::string normalize_text(std::string_view text);

}  // namespace maskgen
