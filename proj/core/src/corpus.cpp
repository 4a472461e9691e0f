#include "maskgen/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "maskgen/errors.hpp"
#include "maskgen/features.hpp"

namespace maskgen {
namespace {

using json = nlohmann::json;

std::string require_string(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) throw ParseError(std::string("missing field '") + field + "'", line);
  if (!it->is_string()) throw ParseError(std::string("field '") + field + "' must be a string", line);
  return it->get<std::string>();
}

}  // namespace

void write_corpus(const std::string& path, const std::vector<CorpusItem>& items,
                  const std::string& command_line, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << json{{"meta", {{"command", command_line}, {"seed", seed}}}}.dump() << '\n';
  for (const auto& item : items) {
    json record = {{"id", item.id},
                   {"caption", item.caption},
                   {"questions", item.questions},
                   {"feature_ref", item.feature_ref}};
    out << record.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

std::vector<CorpusItem> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path);
  std::vector<CorpusItem> items;
  std::set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line);
    }
    if (!record.is_object()) throw ParseError("record is not an object", line);
    if (record.contains("meta")) continue;

    CorpusItem item;
    item.id = require_string(record, "id", line);
    item.caption = require_string(record, "caption", line);
    auto q = record.find("questions");
    if (q == record.end()) throw ParseError("missing field 'questions'", line);
    if (!q->is_array()) throw ParseError("field 'questions' must be an array", line);
    for (const auto& question : *q) {
      if (!question.is_string()) throw ParseError("questions must be strings", line);
      item.questions.push_back(question.get<std::string>());
    }
    if (record.contains("feature_ref")) item.feature_ref = require_string(record, "feature_ref", line);
    if (item.questions.empty()) throw ValidationError("line " + std::to_string(line) + ": item has no questions");
    if (!ids.insert(item.id).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate item id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

Vocabulary build_vocab(std::span<const CorpusItem> items) {
  if (items.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  std::vector<std::string> texts;
  for (const auto& item : items) {
    texts.push_back(item.caption);
    texts.insert(texts.end(), item.questions.begin(), item.questions.end());
  }
  return Vocabulary::build(texts);
}

Dataset load_dataset(const std::string& corpus_path, bool with_images, std::size_t num_regions,
                     std::size_t feature_dim) {
  Dataset data;
  data.items = load_corpus(corpus_path);
  if (!with_images) return data;

  const auto base = std::filesystem::path(corpus_path).parent_path();
  std::map<std::string, FeatureFile> files;
  data.images.reserve(data.items.size());
  for (const auto& item : data.items) {
    const auto hash = item.feature_ref.rfind('#');
    if (item.feature_ref.empty() || hash == std::string::npos) {
      throw ValidationError("item '" + item.id + "' has no usable feature_ref");
    }
    const std::string file = item.feature_ref.substr(0, hash);
    std::size_t index = 0;
    try {
      index = std::stoul(item.feature_ref.substr(hash + 1));
    } catch (const std::exception&) {
      throw ValidationError("item '" + item.id + "' has a malformed feature_ref");
    }
    auto it = files.find(file);
    if (it == files.end()) {
      it = files.emplace(file, read_features((base / file).string(), num_regions, feature_dim)).first;
    }
    if (index >= it->second.images.size()) {
      throw ValidationError("item '" + item.id + "' refers to image " + std::to_string(index) +
                            " beyond the end of " + file);
    }
    data.images.push_back(it->second.images[index]);
  }
  return data;
}

}  // namespace maskgen
