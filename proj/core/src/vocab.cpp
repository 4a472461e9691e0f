#include "maskgen/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "maskgen/errors.hpp"

namespace maskgen {

const std::vector<std::string>& special_token_strings() {
  static const std::vector<std::string> kSpecials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[EOS]"};
  return kSpecials;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(special_token_strings()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& specials = special_token_strings();
  if (tokens_.size() < specials.size() || !std::equal(specials.begin(), specials.end(), tokens_.begin())) {
    throw ValidationError("vocabulary must start with [PAD] [UNK] [CLS] [SEP] [MASK] [EOS]");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ValidationError("vocabulary repeats token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& t : tokenize(text)) ++counts[t];
  }
  for (const auto& s : special_token_strings()) counts.erase(s);
  std::vector<std::pair<std::string, std::size_t>> words(counts.begin(), counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = special_token_strings();
  for (auto& [w, c] : words) tokens.push_back(w);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  return Vocabulary(std::move(tokens));
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? specials_.unk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " is not in the vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSeq encode_text(std::string_view text, const Vocabulary& vocab) {
  TokenSeq out;
  for (const auto& t : tokenize(text)) out.push_back(vocab.id(t));
  return out;
}

std::string decode_text(const TokenSeq& ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

}  // namespace maskgen
