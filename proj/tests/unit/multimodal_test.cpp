#include <doctest.h>

#include "maskgen/errors.hpp"
#include "maskgen/multimodal.hpp"
#include "oracles.hpp"

using namespace maskgen;

namespace {

ObjectRegion region(Scalar relevance, std::vector<Scalar> features = {1, 2}) {
  return {std::move(features), {0.1, 0.2, 0.3, 0.4}, relevance};
}

}  // namespace

TEST_CASE("object embedding is features then box") {
  const auto o = object_embedding(region(0.5, {7, 8, 9}));
  CHECK(o == std::vector<Scalar>{7, 8, 9, 0.1, 0.2, 0.3, 0.4});
}

TEST_CASE("projection is weight transpose times object plus bias") {
  CrossModalProjection p{Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}), Tensor::vector({0.5, -0.5})};
  const std::vector<Scalar> o = {1, 0, 2};
  const Tensor y = project_region(o, p);
  CHECK(y[0] == 11.5);
  CHECK(y[1] == 13.5);
  const std::vector<Scalar> bad = {1, 2};
  CHECK_THROWS_AS(project_region(bad, p), ShapeError);
}

TEST_CASE("visual sequences keep relevance order") {
  CHECK_THROWS_AS(VisualSequence({region(0.2), region(0.9)}), ValidationError);
  const auto v = VisualSequence::from_unordered({region(0.2, {1, 0}), region(0.9), region(0.2, {2, 0})});
  CHECK(v.regions()[0].relevance == 0.9);
  CHECK(v.regions()[1].features[0] == 1.0);
  CHECK(v.regions()[2].features[0] == 2.0);
}

TEST_CASE("region validation") {
  CHECK_THROWS_AS(validate_region(region(0.5, {1}), 2), DimensionError);
  ObjectRegion r = region(0.5);
  r.box[2] = 1.5;
  CHECK_THROWS_AS(validate_region(r, 2), ValidationError);
}

TEST_CASE("input layouts") {
  const VisualSequence v({region(0.9), region(0.5), region(0.1)});
  const std::vector<TokenId> caption = {10, 11};
  const SpecialTokens sp;

  const auto c = assemble_input(InputMode::kCaptionOnly, nullptr, caption, 8);
  REQUIRE(c.size() == 3);
  CHECK(c.slots[0].token == sp.cls);
  CHECK(c.slots[2].token == 11);
  CHECK(c.visual_span.empty());
  CHECK(c.text_span == SlotSpan{1, 3});

  const auto i = assemble_input(InputMode::kImageOnly, &v, {}, 8);
  REQUIRE(i.size() == 4);
  CHECK(i.visual_span == SlotSpan{1, 4});
  CHECK(i.slots[1].kind == SlotKind::kRegion);
  CHECK(i.regions.rows() == 3);
  CHECK(i.regions.cols() == 6);

  const auto b = assemble_input(InputMode::kImagePlusCaption, &v, caption, 8);
  REQUIRE(b.size() == 7);
  CHECK(b.slots[4].token == sp.sep);
  CHECK(b.text_span == SlotSpan{5, 7});
  CHECK(b.positions.back() == 6);

  CHECK_THROWS_AS(assemble_input(InputMode::kImageOnly, nullptr, {}, 8), ValidationError);
  CHECK_THROWS_AS(assemble_input(InputMode::kCaptionOnly, nullptr, caption, 1), ValidationError);
}

TEST_CASE("append_tokens keeps the prefix") {
  const std::vector<TokenId> caption = {10};
  const auto c = assemble_input(InputMode::kCaptionOnly, nullptr, caption, 8);
  const std::vector<TokenId> more = {4};
  const std::vector<std::size_t> pos = {2};
  const auto a = append_tokens(c, more, pos);
  CHECK(a.size() == 3);
  CHECK(a.positions[2] == 2);
  CHECK(a.slots[1] == c.slots[1]);
}
