#include "maskgen/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "maskgen/errors.hpp"

namespace maskgen {

void write_checkpoint(const std::string& path, const Model& model,
                      const std::vector<std::string>& vocabulary, const std::string& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_u32(out, kCheckpointVersion);
  detail::write_string(out, metadata);
  detail::write_string(out, format_key_values(to_key_values(model.config())));
  detail::write_u32(out, static_cast<std::uint32_t>(vocabulary.size()));
  for (const auto& token : vocabulary) detail::write_string(out, token);
  detail::write_u32(out, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    detail::write_string(out, p.id());
    const Shape& shape = p.value().shape();
    detail::write_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (Scalar v : p.value().values()) detail::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw DataError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  const std::string what = "checkpoint " + path;
  char magic[4];
  detail::read_exact(in, magic, sizeof magic, what);
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) throw FormatError(what + ": bad magic");
  const std::uint32_t version = detail::read_u32(in, what);
  if (version != kCheckpointVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  }
  std::string metadata = detail::read_string(in, what);
  const ModelConfig config = model_config_from(parse_key_values(detail::read_string(in, what)));
  const std::uint32_t vocab_count = detail::read_u32(in, what);
  if (vocab_count > (1u << 24)) throw FormatError(what + ": implausible vocabulary size");
  std::vector<std::string> vocabulary;
  vocabulary.reserve(vocab_count);
  for (std::uint32_t i = 0; i < vocab_count; ++i) vocabulary.push_back(detail::read_string(in, what));

  Model model(config);
  const std::uint32_t count = detail::read_u32(in, what);
  if (count != model.params().size()) {
    throw FormatError(what + ": holds " + std::to_string(count) + " parameters, config implies " +
                      std::to_string(model.params().size()));
  }
  for (auto& p : model.params()) {
    const std::string name = detail::read_string(in, what);
    if (name != p.id()) throw FormatError(what + ": expected parameter " + p.id() + ", found " + name);
    const std::uint32_t rank = detail::read_u32(in, what);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(detail::read_u32(in, what));
    if (shape != p.value().shape()) {
      throw DimensionError(what + ": parameter " + name + " has shape " + shape_string(shape) +
                           ", expected " + shape_string(p.value().shape()));
    }
    for (auto& v : p.mutable_value().values()) v = detail::read_f32(in, what);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes");
  return Checkpoint{std::move(model), std::move(vocabulary), std::move(metadata)};
}

void round_to_f32(Model& model) {
  for (auto& p : model.params()) {
    for (auto& v : p.mutable_value().values()) v = static_cast<float>(v);
  }
}

}  // namespace maskgen
