#pragma once

#include <span>
#include <vector>

#include "afpb/image.hpp"
#include "afpb/model.hpp"

namespace afpb {

/// Single-channel map in [0, 1], row-major.
struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  /// 8-bit rendering for PGM export.
  Image to_image() const;
};

/// Channel mean of `channels` maps of map_w x map_h (CHW), bilinearly
/// upsampled to out_w x out_h, then min-max normalized. A constant map
/// normalizes to all zeros.
SaliencyMap saliency_from_feature_maps(std::span<const double> maps, int channels, int map_w, int map_h,
                                       int out_w, int out_h);

/// Saliency of the last conv layer at the network input resolution.
SaliencyMap saliency_map(const ModelParams& params, const Image& img);

/// Resamples a map to new dims (bilinear), keeping values in [0, 1].
SaliencyMap resample(const SaliencyMap& map, int width, int height);

/// Pixels at or above the q-quantile (the floor(q * P)-th smallest value) are
/// set to 255. Constant maps have no salient region.
Image binarize(const SaliencyMap& map, double q = 0.5);

struct PrecisionResult {
  double precision = 0.0;
  long long salient = 0;
  long long overlap = 0;
  bool empty_salient = false;
};

/// |salient and annotation| / |salient|, nonzero pixels counted as set.
/// An empty salient region yields 0 and a warning.
PrecisionResult detection_precision(const Image& salient, const Image& annotation);

}  // namespace afpb
