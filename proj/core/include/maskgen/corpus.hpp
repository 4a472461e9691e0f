#pragma once

#include <span>
#include <string>
#include <vector>

#include "maskgen/multimodal.hpp"
#include "maskgen/vocab.hpp"

namespace maskgen {

struct CorpusItem {
  std::string id;
  std::string caption;
  std::vector<std::string> questions;
  // "<feature file relative to the corpus file>#<image index>", or empty.
  std::string feature_ref;

  friend bool operator==(const CorpusItem&, const CorpusItem&) = default;
};

// Line-delimited JSON, one object per line:
//   {"caption": "...", "feature_ref": "train.vfea#0", "id": "...", "questions": ["...", ...]}
// An optional first line {"meta": {...}} records the producing command.
void write_corpus(const std::string& path, const std::vector<CorpusItem>& items,
                  const std::string& command_line, std::uint64_t seed);

// Throws ParseError naming the line for malformed records or missing fields,
// ValidationError for duplicate ids or items without questions.
std::vector<CorpusItem> load_corpus(const std::string& path);

Vocabulary build_vocab(std::span<const CorpusItem> items);

// Corpus items with their regions resolved (images is empty when the corpus
// was loaded without features).
struct Dataset {
  std::vector<CorpusItem> items;
  std::vector<VisualSequence> images;

  bool has_images() const { return !items.empty() && images.size() == items.size(); }
};

// Loads a corpus and, when with_images is set, the feature files its items
// reference. Throws DimensionError when stored N / D_f disagree with the
// expected ones.
Dataset load_dataset(const std::string& corpus_path, bool with_images,
                     std::size_t num_regions, std::size_t feature_dim);

}  // namespace maskgen
