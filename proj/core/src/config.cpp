#include "maskgen/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "maskgen/errors.hpp"

namespace maskgen {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::size_t parse_size_value(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key " + key + " expects a non-negative integer, got '" + value + "'");
  }
  return out;
}

double parse_real_value(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key " + key + " expects a real number, got '" + value + "'");
}

bool parse_bool_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key " + key + " expects true/false, got '" + value + "'");
}

std::string format_real_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
  if (num_layers == 0) fail("num_layers must be positive");
  if (num_heads == 0) fail("num_heads must be positive");
  if (model_dim == 0 || model_dim % num_heads != 0) fail("model_dim must be a positive multiple of num_heads");
  if (ffn_dim == 0) fail("ffn_dim must be positive");
  if (vocab_size < 6) fail("vocab_size must hold the six special tokens");
  if (feature_dim == 0) fail("feature_dim must be positive");
  if (boxes_dim != 4) fail("boxes_dim is fixed at 4");
  if (num_regions == 0) fail("num_regions must be positive");
  if (max_positions < num_regions + max_caption_length + max_question_length + 2) {
    fail("max_positions must be at least num_regions + max_caption_length + max_question_length + 2");
  }
  if (dropout < 0 || dropout >= 1) fail("dropout must lie in [0, 1)");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", number);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", number);
    if (out.count(key)) throw ParseError("duplicate key " + key, number);
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

KeyValues to_key_values(const ModelConfig& c) {
  return {
      {"num_layers", std::to_string(c.num_layers)},
      {"num_heads", std::to_string(c.num_heads)},
      {"model_dim", std::to_string(c.model_dim)},
      {"ffn_dim", std::to_string(c.ffn_dim)},
      {"vocab_size", std::to_string(c.vocab_size)},
      {"max_positions", std::to_string(c.max_positions)},
      {"feature_dim", std::to_string(c.feature_dim)},
      {"boxes_dim", std::to_string(c.boxes_dim)},
      {"num_regions", std::to_string(c.num_regions)},
      {"max_caption_length", std::to_string(c.max_caption_length)},
      {"max_question_length", std::to_string(c.max_question_length)},
      {"use_type_embeddings", c.use_type_embeddings ? "true" : "false"},
      {"dropout", format_real_value(c.dropout)},
  };
}

bool apply_key_value(ModelConfig& c, const std::string& key, const std::string& value) {
  if (key == "num_layers") c.num_layers = parse_size_value(key, value);
  else if (key == "num_heads") c.num_heads = parse_size_value(key, value);
  else if (key == "model_dim") c.model_dim = parse_size_value(key, value);
  else if (key == "ffn_dim") c.ffn_dim = parse_size_value(key, value);
  else if (key == "vocab_size") c.vocab_size = parse_size_value(key, value);
  else if (key == "max_positions") c.max_positions = parse_size_value(key, value);
  else if (key == "feature_dim") c.feature_dim = parse_size_value(key, value);
  else if (key == "boxes_dim") c.boxes_dim = parse_size_value(key, value);
  else if (key == "num_regions") c.num_regions = parse_size_value(key, value);
  else if (key == "max_caption_length") c.max_caption_length = parse_size_value(key, value);
  else if (key == "max_question_length") c.max_question_length = parse_size_value(key, value);
  else if (key == "use_type_embeddings") c.use_type_embeddings = parse_bool_value(key, value);
  else if (key == "dropout") c.dropout = parse_real_value(key, value);
  else return false;
  return true;
}

ModelConfig model_config_from(const KeyValues& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) {
    if (!apply_key_value(c, k, v)) throw ConfigError("unknown model config key " + k);
  }
  return c;
}

}  // namespace maskgen
