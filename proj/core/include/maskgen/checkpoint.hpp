#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskgen/model.hpp"

namespace maskgen {

inline constexpr char kCheckpointMagic[4] = {'M', 'G', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian):
//   "MGCK" | u32 version | str metadata | str config (key=value text)
//   | u32 vocab_count | str token * vocab_count
//   | u32 param_count | { str name | u32 rank | u32 dim * rank | f32 * size } * param_count
// where str = u32 byte length followed by the bytes. Parameters are stored in
// registration order at f32 precision.
struct Checkpoint {
  Model model;
  std::vector<std::string> vocabulary;
  std::string metadata;
};

void write_checkpoint(const std::string& path, const Model& model,
                      const std::vector<std::string>& vocabulary, const std::string& metadata);
Checkpoint read_checkpoint(const std::string& path);

// Rounds every parameter to f32, as a write/read round trip would.
void round_to_f32(Model& model);

}  // namespace maskgen
