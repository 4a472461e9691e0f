#include "maskgen/features.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "maskgen/errors.hpp"

namespace maskgen {

void write_features(const std::string& path, const std::vector<VisualSequence>& images,
                    std::size_t num_regions, std::size_t feature_dim) {
  for (const auto& image : images) {
    if (image.size() != num_regions) {
      throw DimensionError("image has " + std::to_string(image.size()) + " regions, expected " +
                           std::to_string(num_regions));
    }
    for (const auto& r : image.regions()) validate_region(r, feature_dim);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write(kFeatureMagic, sizeof kFeatureMagic);
  detail::write_u32(out, kFeatureVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(images.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(num_regions));
  detail::write_u32(out, static_cast<std::uint32_t>(feature_dim));
  for (const auto& image : images) {
    for (const auto& r : image.regions()) {
      for (Scalar f : r.features) detail::write_f32(out, static_cast<float>(f));
      for (Scalar b : r.box) detail::write_f32(out, static_cast<float>(b));
      detail::write_f32(out, static_cast<float>(r.relevance));
    }
  }
  if (!out) throw DataError("failed writing " + path);
}

FeatureFile read_features(const std::string& path, std::optional<std::size_t> expected_regions,
                          std::optional<std::size_t> expected_feature_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path);
  const std::string what = "feature file " + path;
  char magic[4];
  detail::read_exact(in, magic, sizeof magic, what);
  if (!std::equal(magic, magic + 4, kFeatureMagic)) throw FormatError(what + ": bad magic");
  const std::uint32_t version = detail::read_u32(in, what);
  if (version != kFeatureVersion) throw FormatError(what + ": unsupported version " + std::to_string(version));

  FeatureFile file;
  const std::uint32_t count = detail::read_u32(in, what);
  file.num_regions = detail::read_u32(in, what);
  file.feature_dim = detail::read_u32(in, what);
  if (expected_regions && *expected_regions != file.num_regions) {
    throw DimensionError(what + ": stores " + std::to_string(file.num_regions) +
                         " regions per image, expected " + std::to_string(*expected_regions));
  }
  if (expected_feature_dim && *expected_feature_dim != file.feature_dim) {
    throw DimensionError(what + ": stores feature dimension " + std::to_string(file.feature_dim) +
                         ", expected " + std::to_string(*expected_feature_dim));
  }
  file.images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<ObjectRegion> regions(file.num_regions);
    for (auto& r : regions) {
      r.features.resize(file.feature_dim);
      for (auto& f : r.features) f = detail::read_f32(in, what);
      for (auto& b : r.box) b = detail::read_f32(in, what);
      r.relevance = detail::read_f32(in, what);
    }
    file.images.emplace_back(std::move(regions));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes");
  return file;
}

}  // namespace maskgen
