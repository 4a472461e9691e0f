#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace maskgen {

struct ModelConfig {
  std::size_t num_layers = 4;
  std::size_t num_heads = 4;
  std::size_t model_dim = 128;
  std::size_t ffn_dim = 512;
  std::size_t vocab_size = 1000;
  std::size_t max_positions = 64;
  std::size_t feature_dim = 32;
  std::size_t boxes_dim = 4;
  std::size_t num_regions = 8;
  std::size_t max_caption_length = 16;
  std::size_t max_question_length = 24;
  bool use_type_embeddings = false;
  double dropout = 0.1;

  std::size_t head_dim() const { return model_dim / num_heads; }
  std::size_t region_dim() const { return feature_dim + boxes_dim; }

  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Flat `key=value` documents. Blank lines and lines starting with '#' are
// skipped; surrounding whitespace is trimmed.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);

// Value parsers shared by every key=value consumer; they throw ConfigError
// naming the key.
std::size_t parse_size_value(const std::string& key, const std::string& value);
double parse_real_value(const std::string& key, const std::string& value);
bool parse_bool_value(const std::string& key, const std::string& value);
// Text that reads back to the same double.
std::string format_real_value(double value);
std::string format_key_values(const KeyValues& kv);
KeyValues read_key_value_file(const std::string& path);

KeyValues to_key_values(const ModelConfig& config);
// Applies one key; returns false if the key is not a ModelConfig field.
bool apply_key_value(ModelConfig& config, const std::string& key, const std::string& value);
ModelConfig model_config_from(const KeyValues& kv);

}  // namespace maskgen
