#include "maskgen/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "maskgen/errors.hpp"
#include "maskgen/features.hpp"
#include "maskgen/random.hpp"

namespace maskgen {
namespace {

constexpr std::uint64_t kCatalogStream = 1;
constexpr std::uint64_t kSplitStreamBase = 10;
constexpr double kCodeScale = 0.5;
constexpr double kClutterScale = 0.3;

struct SceneObject {
  std::size_t shape;
  std::size_t color;
  std::size_t size;
  double relevance;
};

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

class SynthWorld {
 public:
  explicit SynthWorld(const SynthConfig& config) : config_(config) {
    Rng rng(derive_seed(config.seed, kCatalogStream));
    auto codes = [&](std::size_t n) {
      std::vector<std::vector<double>> out(n, std::vector<double>(config.feature_dim));
      for (auto& code : out) {
        for (auto& v : code) v = rng.normal(0.0, kCodeScale);
      }
      return out;
    };
    shape_codes_ = codes(synth_shapes().size());
    color_codes_ = codes(synth_colors().size());
    size_codes_ = codes(synth_sizes().size());
  }

  SynthSplit make_split(const std::string& name, std::size_t count, std::uint64_t stream) const {
    Rng rng(derive_seed(config_.seed, stream));
    SynthSplit split;
    split.name = name;
    for (std::size_t i = 0; i < count; ++i) {
      const std::vector<SceneObject> objects = sample_objects(rng);
      split.images.push_back(render(objects, rng));
      CorpusItem item;
      item.id = name + "_" + std::to_string(i);
      item.caption = caption(objects, rng);
      for (std::size_t q = 0; q < config_.refs_per_item; ++q) {
        item.questions.push_back(question(objects[q % objects.size()], rng));
      }
      item.feature_ref = name + ".vfea#" + std::to_string(i);
      split.items.push_back(std::move(item));
    }
    return split;
  }

 private:
  std::vector<SceneObject> sample_objects(Rng& rng) const {
    const std::size_t k = config_.min_objects + rng.below(config_.max_objects - config_.min_objects + 1);
    std::vector<std::size_t> shapes(synth_shapes().size());
    std::iota(shapes.begin(), shapes.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(shapes));
    std::vector<SceneObject> objects;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t color = rng.below(synth_colors().size());
      const std::size_t size = rng.below(synth_sizes().size());
      objects.push_back({shapes[j], color, size, f32(rng.uniform(0.55, 1.0))});
    }
    // most relevant first, matching the region order
    std::stable_sort(objects.begin(), objects.end(),
                     [](const SceneObject& a, const SceneObject& b) { return a.relevance > b.relevance; });
    return objects;
  }

  VisualSequence render(const std::vector<SceneObject>& objects, Rng& rng) const {
    std::vector<ObjectRegion> regions;
    for (std::size_t j = 0; j < config_.num_regions; ++j) {
      ObjectRegion r;
      r.features.resize(config_.feature_dim);
      const bool is_object = j < objects.size();
      for (std::size_t k = 0; k < config_.feature_dim; ++k) {
        double v = 0;
        if (is_object) {
          v = shape_codes_[objects[j].shape][k] + color_codes_[objects[j].color][k] +
              size_codes_[objects[j].size][k];
        } else {
          v = rng.normal(0.0, kClutterScale);
        }
        r.features[k] = f32(v + rng.normal(0.0, config_.noise));
      }
      const double w = rng.uniform(0.1, 0.3);
      const double h = rng.uniform(0.1, 0.3);
      const double x0 = rng.uniform(0.0, 1.0 - w);
      const double y0 = rng.uniform(0.0, 1.0 - h);
      r.box = {f32(x0), f32(y0), f32(x0 + w), f32(y0 + h)};
      r.relevance = is_object ? objects[j].relevance : f32(rng.uniform(0.0, 0.5));
      regions.push_back(std::move(r));
    }
    return VisualSequence::from_unordered(std::move(regions));
  }

  std::string caption(const std::vector<SceneObject>& objects, Rng& rng) const {
    const auto& shapes = synth_shapes();
    if (objects.size() == 2) {
      static const char* kTemplates[] = {"a photo of a {0} and a {1} .", "there is a {0} next to a {1} .",
                                         "a {0} near a {1} on a table ."};
      std::string t = kTemplates[rng.below(3)];
      t.replace(t.find("{0}"), 3, shapes[objects[0].shape]);
      t.replace(t.find("{1}"), 3, shapes[objects[1].shape]);
      return t;
    }
    std::string out = "a ";
    for (std::size_t j = 0; j < objects.size(); ++j) {
      if (j > 0) out += j + 1 == objects.size() ? " and a " : " , a ";
      out += shapes[objects[j].shape];
    }
    return out + " on a table .";
  }

  std::string question(const SceneObject& o, Rng& rng) const {
    const std::string& shape = synth_shapes()[o.shape];
    const std::string& color = synth_colors()[o.color];
    const std::string& size = synth_sizes()[o.size];
    switch (rng.below(5)) {
      case 0: return "what color is the " + size + " " + shape + " ?";
      case 1: return "how big is the " + color + " " + shape + " ?";
      case 2: return "what is the " + color + " " + shape + " made of ?";
      case 3: return "what shape is the " + color + " object ?";
      default: return "where is the " + size + " " + color + " " + shape + " ?";
    }
  }

  SynthConfig config_;
  std::vector<std::vector<double>> shape_codes_;
  std::vector<std::vector<double>> color_codes_;
  std::vector<std::vector<double>> size_codes_;
};

}  // namespace

const std::vector<std::string>& synth_shapes() {
  static const std::vector<std::string> k = {"cube", "sphere", "cylinder", "cone",
                                             "pyramid", "ring", "star", "disk"};
  return k;
}

const std::vector<std::string>& synth_colors() {
  static const std::vector<std::string> k = {"red", "blue", "green", "yellow", "purple", "orange"};
  return k;
}

const std::vector<std::string>& synth_sizes() {
  static const std::vector<std::string> k = {"small", "large"};
  return k;
}

void SynthConfig::validate() const {
  if (n_train == 0 || n_val == 0 || n_test == 0) throw ConfigError("synth split sizes must be at least 1");
  if (refs_per_item == 0) throw ConfigError("synth refs_per_item must be at least 1");
  if (feature_dim == 0) throw ConfigError("synth feature_dim must be positive");
  if (min_objects == 0 || min_objects > max_objects) throw ConfigError("synth object counts are inconsistent");
  if (max_objects > num_regions) throw ConfigError("synth max_objects exceeds num_regions");
  if (max_objects > synth_shapes().size()) throw ConfigError("synth max_objects exceeds the shape catalog");
  if (noise < 0) throw ConfigError("synth noise must be non-negative");
}

SynthCorpus synthesize(const SynthConfig& config) {
  config.validate();
  const SynthWorld world(config);
  return {world.make_split("train", config.n_train, kSplitStreamBase),
          world.make_split("val", config.n_val, kSplitStreamBase + 1),
          world.make_split("test", config.n_test, kSplitStreamBase + 2)};
}

SynthPaths synth_dataset(const SynthConfig& config, const std::string& out_dir,
                         const std::string& command_line) {
  const SynthCorpus corpus = synthesize(config);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  SynthPaths paths;
  auto emit = [&](const SynthSplit& split, std::string& corpus_path, std::string& feature_path) {
    corpus_path = (dir / (split.name + ".jsonl")).string();
    feature_path = (dir / (split.name + ".vfea")).string();
    write_corpus(corpus_path, split.items, command_line, config.seed);
    write_features(feature_path, split.images, config.num_regions, config.feature_dim);
  };
  emit(corpus.train, paths.train_corpus, paths.train_features);
  emit(corpus.val, paths.val_corpus, paths.val_features);
  emit(corpus.test, paths.test_corpus, paths.test_features);
  return paths;
}

}  // namespace maskgen
