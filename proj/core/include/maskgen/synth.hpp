#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskgen/corpus.hpp"

namespace maskgen {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_train = 500;
  std::size_t n_val = 100;
  std::size_t n_test = 100;
  std::size_t refs_per_item = 3;
  std::size_t num_regions = 8;
  std::size_t feature_dim = 32;
  double noise = 0.1;
  std::size_t min_objects = 2;
  std::size_t max_objects = 3;

  void validate() const;
};

struct SynthSplit {
  std::string name;
  std::vector<CorpusItem> items;
  std::vector<VisualSequence> images;
};

// A toy visual world. Each image holds a few objects with a shape, colour and
// size; every object emits one region whose features are the sum of fixed
// per-attribute codes plus gaussian noise, so attributes stay linearly
// decodable. The remaining regions are low-relevance clutter. Captions name
// the shapes only; questions name colours and sizes too, so the image carries
// information the caption lacks.
struct SynthCorpus {
  SynthSplit train;
  SynthSplit val;
  SynthSplit test;
};

SynthCorpus synthesize(const SynthConfig& config);

struct SynthPaths {
  std::string train_corpus, val_corpus, test_corpus;
  std::string train_features, val_features, test_features;
};

// Writes <split>.jsonl and <split>.vfea for each split into out_dir.
SynthPaths synth_dataset(const SynthConfig& config, const std::string& out_dir,
                         const std::string& command_line);

// Attribute vocabularies of the toy world.
const std::vector<std::string>& synth_shapes();
const std::vector<std::string>& synth_colors();
const std::vector<std::string>& synth_sizes();

}  // namespace maskgen
