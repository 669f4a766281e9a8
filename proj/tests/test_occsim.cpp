#include <doctest.h>

#include <cmath>

#include "afpb/error.hpp"
#include "afpb/occsim.hpp"

using namespace afpb;

namespace {

Image noise_image(int w, int h, Rng& rng) {
  Image img(w, h, 3);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

PersonSample sample_of(std::string id, int label, Image img) {
  PersonSample s;
  s.id = std::move(id);
  s.identity = label;
  s.mask = std::make_shared<const Image>(img.width(), img.height(), 1, 255);
  s.image = std::make_shared<const Image>(std::move(img));
  return s;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("config validation") {
  OcclusionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.ratio_lo = 0.4;
  cfg.ratio_hi = 0.3;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg = {};
  cfg.ratio_hi = 1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg = {};
  cfg.aspect_lo = 0.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg = {};
  cfg.patch_side = 40;
  CHECK(code_of([&] { cfg.validate_for(32, 64); }) == ErrorCode::InfeasibleGeometry);
  CHECK(cfg.patch_side_for(32, 64) == 40);
  cfg.patch_side = 0;
  CHECK(cfg.patch_side_for(32, 64) == 8);
  CHECK(cfg.patch_side_for(64, 128) == 16);
}

TEST_CASE("occluded rect stays inside the image and within area and aspect bounds") {
  Rng rng(17);
  OcclusionConfig cfg;
  for (int i = 0; i < 3000; ++i) {
    const int w = static_cast<int>(rng.uniform_int(8, 80));
    const int h = static_cast<int>(rng.uniform_int(8, 120));
    const Rect r = sample_occluded_rect(w, h, cfg, rng);
    REQUIRE(r.w >= 1);
    REQUIRE(r.h >= 1);
    REQUIRE(r.x >= 0);
    REQUIRE(r.y >= 0);
    REQUIRE(r.x + r.w <= w);
    REQUIRE(r.y + r.h <= h);
    const double s = static_cast<double>(w) * h;
    // Rounding each side to an integer moves the area by at most w + h pixels.
    const double eps = static_cast<double>(r.w + r.h) / s;
    const double ratio = static_cast<double>(r.area()) / s;
    REQUIRE(ratio >= cfg.ratio_lo - eps);
    REQUIRE(ratio <= cfg.ratio_hi + eps);
  }
}

TEST_CASE("occluded rect degenerate geometry") {
  Rng rng(1);
  OcclusionConfig cfg;
  cfg.ratio_lo = 0.5;
  cfg.ratio_hi = 0.6;
  cfg.aspect_lo = 1.0;
  cfg.aspect_hi = 1.0;
  // A square of half a 4x40 strip cannot fit: side sqrt(80) > 4.
  CHECK(code_of([&] { sample_occluded_rect(4, 40, cfg, rng); }) == ErrorCode::InfeasibleGeometry);
}

TEST_CASE("background patch comes from the top band") {
  Rng rng(23);
  OcclusionConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    const Rect r = sample_background_rect(32, 64, cfg, rng);
    REQUIRE(r.w == 8);
    REQUIRE(r.h == 8);
    REQUIRE(r.y + r.h <= 16);
    REQUIRE(r.x + r.w <= 32);
  }
  cfg.background_band = 0.1;  // 6-px band
  CHECK(code_of([&] { sample_background_rect(32, 64, cfg, rng); }) == ErrorCode::InfeasibleGeometry);
}

TEST_CASE("simulate_occlusion only touches the target rect and can be replayed") {
  Rng rng(5);
  OcclusionConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const Image src = noise_image(32, 64, rng);
    const auto [out, rec] = simulate_occlusion(src, cfg, rng);
    REQUIRE(out.width() == src.width());
    REQUIRE(out.height() == src.height());
    for (int y = 0; y < src.height(); ++y)
      for (int x = 0; x < src.width(); ++x)
        if (!rec.target_rect.contains(x, y))
          for (int c = 0; c < 3; ++c) REQUIRE(out.at(x, y, c) == src.at(x, y, c));
    REQUIRE(replay_occlusion(src, rec) == out);
    // Inside the target, the pixels are the resized background patch.
    const Image expected = resize(crop(src, rec.patch_rect), rec.target_rect.w, rec.target_rect.h);
    REQUIRE(crop(out, rec.target_rect) == expected);
    REQUIRE(rec.area_ratio == doctest::Approx(rec.target_rect.area() / (32.0 * 64.0)));
  }
}

TEST_CASE("simulate_occlusion is deterministic per seed") {
  Rng img_rng(8);
  const Image src = noise_image(32, 64, img_rng);
  OcclusionConfig cfg;
  Rng a(99), b(99), c(100);
  const auto ra = simulate_occlusion(src, cfg, a);
  const auto rb = simulate_occlusion(src, cfg, b);
  CHECK(ra.image == rb.image);
  CHECK(ra.record.target_rect == rb.record.target_rect);
  CHECK(ra.record.patch_rect == rb.record.patch_rect);
  bool differs = false;
  for (int i = 0; i < 5 && !differs; ++i) differs = simulate_occlusion(src, cfg, c).image != ra.image;
  CHECK(differs);
}

TEST_CASE("build_occlusion_set keeps labels, flags samples and is jobs-invariant") {
  Rng rng(3);
  std::vector<PersonSample> full;
  for (int i = 0; i < 12; ++i) full.push_back(sample_of("s" + std::to_string(i), 1 + i % 4, noise_image(32, 64, rng)));
  OcclusionConfig cfg;
  cfg.seed = 1234;

  const OcclusionSet one = build_occlusion_set(full, cfg, 0, 1);
  const OcclusionSet four = build_occlusion_set(full, cfg, 0, 4);
  REQUIRE(one.samples.size() == full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto& z = one.samples[i];
    CHECK(z.identity == full[i].identity);
    CHECK(z.occlusion == Occlusion::ArtificialOcclusion);
    CHECK(obc_target(z.occlusion) == 0);
    CHECK(z.id == full[i].id + "#occ");
    CHECK(one.records[i].source_id == full[i].id);
    CHECK(one.records[i].seed == derive_seed(1234, i));
    CHECK(*z.image == *four.samples[i].image);
    CHECK(*z.image == replay_occlusion(*full[i].image, one.records[i]));
    // The mask loses exactly the covered region.
    const Rect& t = one.records[i].target_rect;
    long zeros = 0;
    for (auto v : z.mask->pixels()) zeros += v == 0;
    CHECK(zeros == t.area());
    CHECK(full[i].mask->pixels()[0] == 255);
  }

  const OcclusionSet regen = build_occlusion_set(full, cfg, 1, 1);
  int changed = 0;
  for (std::size_t i = 0; i < full.size(); ++i) changed += *regen.samples[i].image != *one.samples[i].image;
  CHECK(changed > 0);

  const auto all = combine(full, one.samples);
  CHECK(all.size() == 24);
  CHECK(all.front().occlusion == Occlusion::FullBody);
  CHECK(all.back().occlusion == Occlusion::ArtificialOcclusion);
}

TEST_CASE("build_occlusion_set reports the failing sample") {
  std::vector<PersonSample> full{sample_of("tiny", 1, Image(3, 4, 3, 0))};
  OcclusionConfig cfg;
  cfg.patch_side = 3;
  try {
    build_occlusion_set(full, cfg);
    FAIL("expected InfeasibleGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleGeometry);
    CHECK(std::string(e.what()).find("tiny") != std::string::npos);
  }
}
