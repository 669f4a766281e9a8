#include "afpb/occsim.hpp"

#include <cmath>

#include "afpb/error.hpp"
#include "afpb/parallel.hpp"

namespace afpb {

void OcclusionConfig::validate() const {
  if (!(ratio_lo > 0.0 && ratio_lo <= ratio_hi && ratio_hi < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "occluded area ratio must satisfy 0 < r1 <= r2 < 1");
  }
  if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi)) {
    throw Error(ErrorCode::InvalidConfig, "aspect range must satisfy 0 < lo <= hi");
  }
  if (!(background_band > 0.0 && background_band <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "background band must be in (0, 1]");
  }
  if (patch_side < 0) throw Error(ErrorCode::InvalidConfig, "patch side must be >= 0");
}

void OcclusionConfig::validate_for(int img_width, int img_height) const {
  validate();
  const int side = patch_side_for(img_width, img_height);
  if (side > img_width || side > img_height) {
    throw Error(ErrorCode::InfeasibleGeometry,
                "patch side " + std::to_string(side) + " exceeds image dims");
  }
}

namespace {

int band_height(int img_height, double band) {
  return static_cast<int>(std::floor(band * img_height));
}

}  // namespace

Rect sample_occluded_rect(int img_width, int img_height, const OcclusionConfig& cfg, Rng& rng) {
  cfg.validate();
  const double w_max = img_width;
  const double h_max = img_height;
  const double image_area = w_max * h_max;

  auto area_lo = static_cast<long long>(std::ceil(image_area * cfg.ratio_lo));
  auto area_hi = static_cast<long long>(std::floor(image_area * cfg.ratio_hi));
  if (area_lo > area_hi) {
    // The whole interval lies between two integers.
    area_lo = area_hi = std::max(1LL, static_cast<long long>(std::llround(image_area * cfg.ratio_lo)));
  }
  // A fits with some aspect a iff A <= aspect_hi * H^2 and A <= W^2 / aspect_lo.
  const auto fit_cap = static_cast<long long>(
      std::floor(std::min(cfg.aspect_hi * h_max * h_max, w_max * w_max / cfg.aspect_lo)));
  area_hi = std::min(area_hi, fit_cap);
  if (area_lo > area_hi) {
    throw Error(ErrorCode::InfeasibleGeometry, "no rectangle satisfies both area and aspect bounds");
  }

  const auto area = static_cast<double>(rng.uniform_int(area_lo, area_hi));
  const double a_lo = std::max(cfg.aspect_lo, area / (h_max * h_max));
  const double a_hi = std::max(a_lo, std::min(cfg.aspect_hi, w_max * w_max / area));
  const double aspect = a_lo == a_hi ? a_lo : rng.uniform_real(a_lo, a_hi);

  Rect r;
  r.w = std::clamp(static_cast<int>(std::round(std::sqrt(area * aspect))), 1, img_width);
  r.h = std::clamp(static_cast<int>(std::round(std::sqrt(area / aspect))), 1, img_height);
  r.x = static_cast<int>(rng.uniform_int(0, img_width - r.w));
  r.y = static_cast<int>(rng.uniform_int(0, img_height - r.h));
  return r;
}

Rect sample_background_rect(int img_width, int img_height, const OcclusionConfig& cfg, Rng& rng) {
  cfg.validate();
  const int side = cfg.patch_side_for(img_width, img_height);
  const int band = band_height(img_height, cfg.background_band);
  if (side > img_width || side > band) {
    throw Error(ErrorCode::InfeasibleGeometry,
                "background patch of side " + std::to_string(side) + " does not fit the " +
                    std::to_string(band) + "-px background band");
  }
  Rect r{0, 0, side, side};
  r.x = static_cast<int>(rng.uniform_int(0, img_width - side));
  r.y = static_cast<int>(rng.uniform_int(0, band - side));
  return r;
}

Image sample_background_patch(const Image& img, const OcclusionConfig& cfg, Rng& rng) {
  return crop(img, sample_background_rect(img.width(), img.height(), cfg, rng));
}

Image replay_occlusion(const Image& img, const OcclusionRecord& record) {
  const Rect& t = record.target_rect;
  return paste(img, resize(crop(img, record.patch_rect), t.w, t.h), t.x, t.y);
}

OcclusionResult simulate_occlusion(const Image& img, const OcclusionConfig& cfg, Rng& rng) {
  OcclusionRecord record;
  record.target_rect = sample_occluded_rect(img.width(), img.height(), cfg, rng);
  record.patch_rect = sample_background_rect(img.width(), img.height(), cfg, rng);
  record.area_ratio = static_cast<double>(record.target_rect.area()) /
                      (static_cast<double>(img.width()) * img.height());
  Image out = replay_occlusion(img, record);
  return {std::move(out), std::move(record)};
}

OcclusionSet build_occlusion_set(const std::vector<PersonSample>& full_body,
                                 const OcclusionConfig& cfg, int generation, int jobs) {
  cfg.validate();
  const std::uint64_t base =
      generation == 0 ? cfg.seed
                      : derive_seed(cfg.seed, 1'000'000ull + static_cast<std::uint64_t>(generation));
  OcclusionSet out;
  out.samples.resize(full_body.size());
  out.records.resize(full_body.size());

  parallel_for(full_body.size(), jobs, [&](std::size_t i) {
    const PersonSample& src = full_body[i];
    const std::uint64_t seed = derive_seed(base, i);
    Rng rng(seed);
    try {
      auto [image, record] = simulate_occlusion(*src.image, cfg, rng);
      record.source_id = src.id;
      record.seed = seed;

      PersonSample z;
      z.id = src.id + "#occ";
      z.identity = src.identity;
      z.occlusion = Occlusion::ArtificialOcclusion;
      z.image = std::make_shared<const Image>(std::move(image));
      if (src.mask) {
        const Rect& t = record.target_rect;
        z.mask = std::make_shared<const Image>(
            paste(*src.mask, Image(t.w, t.h, src.mask->channels(), 0), t.x, t.y));
      }
      out.samples[i] = std::move(z);
      out.records[i] = std::move(record);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + src.id + ": " + e.detail());
    }
  });
  return out;
}

std::vector<PersonSample> combine(const std::vector<PersonSample>& full_body,
                                  const std::vector<PersonSample>& occluded) {
  std::vector<PersonSample> out;
  out.reserve(full_body.size() + occluded.size());
  out.insert(out.end(), full_body.begin(), full_body.end());
  out.insert(out.end(), occluded.begin(), occluded.end());
  return out;
}

}  // namespace afpb
