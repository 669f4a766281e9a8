#include <doctest.h>

#include "afpb/error.hpp"
#include "afpb/saliency.hpp"

using namespace afpb;

namespace {

Image mask_from(int w, int h, const std::vector<int>& on) {
  Image m(w, h, 1, 0);
  for (int i : on) m.pixels()[static_cast<std::size_t>(i)] = 255;
  return m;
}

}  // namespace

TEST_CASE("saliency_from_feature_maps normalizes to [0, 1]") {
  // Two 2x2 channels; mean is {0, 1, 2, 3}.
  const std::vector<double> maps{0, 2, 4, 6, 0, 0, 0, 0};
  const SaliencyMap s = saliency_from_feature_maps(maps, 2, 2, 2, 2, 2);
  CHECK(s.values == std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0});

  const SaliencyMap up = saliency_from_feature_maps(maps, 2, 2, 2, 8, 6);
  CHECK(up.width == 8);
  CHECK(up.height == 6);
  double lo = 1, hi = 0;
  for (double v : up.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);

  const std::vector<double> flat(8, 3.0);
  for (double v : saliency_from_feature_maps(flat, 2, 2, 2, 4, 4).values) CHECK(v == 0.0);
}

TEST_CASE("binarize takes the upper quantile") {
  SaliencyMap s{2, 2, {0.1, 0.9, 0.5, 0.3}};
  // Sorted 0.1 0.3 0.5 0.9; floor(0.5 * 4) = 2 -> threshold 0.5.
  CHECK(binarize(s, 0.5).pixels() == std::vector<std::uint8_t>{0, 255, 255, 0});
  CHECK(binarize(s, 0.75).pixels() == std::vector<std::uint8_t>{0, 255, 0, 0});
  SaliencyMap flat{2, 2, {0.0, 0.0, 0.0, 0.0}};
  CHECK(binarize(flat, 0.5).pixels() == std::vector<std::uint8_t>(4, 0));
  CHECK_THROWS_AS(binarize(s, 1.0), Error);
  CHECK_THROWS_AS(binarize(s, 0.0), Error);
}

TEST_CASE("detection_precision hand-computed cases") {
  const Image annotation = mask_from(4, 2, {0, 1, 2, 3});
  // Salient region inside the annotation.
  const auto subset = detection_precision(mask_from(4, 2, {1, 2}), annotation);
  CHECK(subset.precision == 1.0);
  CHECK(subset.salient == 2);
  CHECK(subset.overlap == 2);
  // Half of the salient region overlaps.
  const auto half = detection_precision(mask_from(4, 2, {2, 3, 4, 5}), annotation);
  CHECK(half.precision == 0.5);
  const auto none = detection_precision(mask_from(4, 2, {6}), annotation);
  CHECK(none.precision == 0.0);

  std::vector<std::string> warnings;
  auto prev = set_warning_handler([&](std::string_view m) { warnings.emplace_back(m); });
  const auto empty = detection_precision(mask_from(4, 2, {}), annotation);
  set_warning_handler(prev);
  CHECK(empty.precision == 0.0);
  CHECK(empty.empty_salient);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("EmptySalientRegion") != std::string::npos);

  try {
    detection_precision(mask_from(2, 2, {}), annotation);
    FAIL("expected DimMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimMismatch);
  }
}

TEST_CASE("saliency_map on a model") {
  Rng rng(3);
  const ModelParams p = ModelParams::init(ArchSpec{}, 3, rng);
  Image img(32, 32, 3);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  const SaliencyMap s = saliency_map(p, img);
  CHECK(s.width == 32);
  CHECK(s.height == 32);
  for (double v : s.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const SaliencyMap big = resample(s, 20, 50);
  CHECK(big.values.size() == 1000);
  CHECK(s.to_image().width() == 32);
  CHECK_THROWS_AS(saliency_map(p, Image(16, 16, 3, 0)), Error);
}
