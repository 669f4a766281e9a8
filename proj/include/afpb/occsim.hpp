#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "afpb/image.hpp"
#include "afpb/rng.hpp"
#include "afpb/sample.hpp"

namespace afpb {

struct OcclusionConfig {
  /// Side of the square background patch. 0 selects min(width, height) / 4
  /// per image, i.e. 8 px for a 32x64 image.
  int patch_side = 0;
  double ratio_lo = 0.1;
  double ratio_hi = 0.3;
  double aspect_lo = 0.5;
  double aspect_hi = 2.0;
  /// Height fraction of the top strip treated as background (1.0 = whole image).
  double background_band = 0.25;
  std::uint64_t seed = 0;
  /// Regenerate Z at every training epoch instead of once.
  bool regenerate_per_epoch = false;

  int patch_side_for(int img_width, int img_height) const noexcept {
    return patch_side > 0 ? patch_side : std::max(1, std::min(img_width, img_height) / 4);
  }

  /// Throws InvalidConfig on violated ratio/aspect/band invariants and
  /// InfeasibleGeometry if the patch cannot fit an image of these dims.
  void validate() const;
  void validate_for(int img_width, int img_height) const;
};

struct OcclusionRecord {
  std::string source_id;
  Rect patch_rect;
  Rect target_rect;
  double area_ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Draws the occluded rectangle.
///
/// Integer area A uniform over [ceil(S*r1), floor(S*r2)] (truncated to areas
/// for which some aspect in range fits inside the image), aspect a uniform over
/// the sub-range of [aspect_lo, aspect_hi] that keeps both sides inside the
/// image, w = round(sqrt(A*a)), h = round(sqrt(A/a)), then a uniform position.
Rect sample_occluded_rect(int img_width, int img_height, const OcclusionConfig& cfg, Rng& rng);

/// Uniform s x s rect inside the top background band.
Rect sample_background_rect(int img_width, int img_height, const OcclusionConfig& cfg, Rng& rng);
Image sample_background_patch(const Image& img, const OcclusionConfig& cfg, Rng& rng);

struct OcclusionResult {
  Image image;
  OcclusionRecord record;
};

/// Covers a random region of img with a resized background patch. The target
/// rect is drawn before the patch rect.
OcclusionResult simulate_occlusion(const Image& img, const OcclusionConfig& cfg, Rng& rng);

/// Rebuilds the occluded image from its record alone.
Image replay_occlusion(const Image& img, const OcclusionRecord& record);

struct OcclusionSet {
  std::vector<PersonSample> samples;
  std::vector<OcclusionRecord> records;
};

/// One occluded sample per source, sample i drawing from
/// Rng(derive_seed(seed_i_base, i)) where seed_i_base is cfg.seed for
/// generation 0 and derive_seed(cfg.seed, 1'000'000 + generation) otherwise.
/// Body masks, when present, lose the covered region. jobs > 1 fans out over
/// samples without affecting the result.
OcclusionSet build_occlusion_set(const std::vector<PersonSample>& full_body,
                                 const OcclusionConfig& cfg, int generation = 0, int jobs = 1);

std::vector<PersonSample> combine(const std::vector<PersonSample>& full_body,
                                  const std::vector<PersonSample>& occluded);

}  // namespace afpb
