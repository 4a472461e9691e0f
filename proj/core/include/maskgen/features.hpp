#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maskgen/multimodal.hpp"

namespace maskgen {

inline constexpr char kFeatureMagic[4] = {'V', 'F', 'E', 'A'};
inline constexpr std::uint32_t kFeatureVersion = 1;

// Layout (little-endian):
//   "VFEA" | u32 version | u32 image_count | u32 N | u32 D_f
//   then per image N records of (D_f f32 features, 4 f32 box, 1 f32 relevance)
struct FeatureFile {
  std::size_t num_regions = 0;
  std::size_t feature_dim = 0;
  std::vector<VisualSequence> images;
};

// Every image must have exactly `num_regions` regions of `feature_dim`
// features. Values are stored at f32 precision.
void write_features(const std::string& path, const std::vector<VisualSequence>& images,
                    std::size_t num_regions, std::size_t feature_dim);

// Throws FormatError (magic/version), TruncatedFileError, or DimensionError
// when the stored N / D_f disagree with the expected values.
FeatureFile read_features(const std::string& path,
                          std::optional<std::size_t> expected_regions = std::nullopt,
                          std::optional<std::size_t> expected_feature_dim = std::nullopt);

}  // namespace maskgen
