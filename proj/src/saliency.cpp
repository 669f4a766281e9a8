#include "afpb/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "afpb/error.hpp"

namespace afpb {

Image SaliencyMap::to_image() const {
  std::vector<std::uint8_t> px(values.size());
  std::transform(values.begin(), values.end(), px.begin(), [](double v) { return quantize(v * 255.0); });
  return Image(width, height, 1, std::move(px));
}

namespace {

void normalize_min_max(std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo, max = *hi;
  if (!(max > min)) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  for (double& x : v) x = (x - min) / (max - min);
}

}  // namespace

SaliencyMap saliency_from_feature_maps(std::span<const double> maps, int channels, int map_w, int map_h,
                                       int out_w, int out_h) {
  const std::size_t area = static_cast<std::size_t>(map_w) * map_h;
  if (channels < 1 || maps.size() != area * channels) {
    throw Error(ErrorCode::ShapeMismatch, "feature maps do not match channels x height x width");
  }
  std::vector<double> mean(area, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < area; ++j) mean[j] += maps[c * area + j];
  }
  for (double& v : mean) v /= channels;

  SaliencyMap out{out_w, out_h, resize_plane(mean, map_w, map_h, out_w, out_h)};
  normalize_min_max(out.values);
  return out;
}

SaliencyMap saliency_map(const ModelParams& params, const Image& img) {
  const ArchSpec& arch = params.arch;
  if (img.width() != arch.input_size || img.height() != arch.input_size ||
      img.channels() != arch.input_channels) {
    throw Error(ErrorCode::ShapeMismatch, "image dims do not match the network input");
  }
  const std::vector<std::vector<double>> batch{normalize_planar(img)};
  const ForwardTrace t = forward(params, batch);
  const int side = t.sides.back();
  return saliency_from_feature_maps(t.activations[0].back(), arch.convs.back().out_channels, side, side,
                                    arch.input_size, arch.input_size);
}

SaliencyMap resample(const SaliencyMap& map, int width, int height) {
  SaliencyMap out{width, height, resize_plane(map.values, map.width, map.height, width, height)};
  for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image binarize(const SaliencyMap& map, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile must be in (0, 1)");
  Image mask(map.width, map.height, 1, 0);
  if (map.values.empty()) return mask;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  if (!(*hi > *lo)) return mask;

  std::vector<double> sorted = map.values;
  const auto n = sorted.size();
  const auto k = std::min(n - 1, static_cast<std::size_t>(std::floor(q * static_cast<double>(n))));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = sorted[k];
  for (std::size_t i = 0; i < n; ++i) {
    if (map.values[i] >= threshold) mask.pixels()[i] = 255;
  }
  return mask;
}

PrecisionResult detection_precision(const Image& salient, const Image& annotation) {
  if (salient.width() != annotation.width() || salient.height() != annotation.height() ||
      salient.channels() != 1 || annotation.channels() != 1) {
    throw Error(ErrorCode::DimMismatch, "salient mask and annotation must be single-channel with equal dims");
  }
  PrecisionResult r;
  for (std::size_t i = 0; i < salient.size(); ++i) {
    if (salient.pixels()[i] == 0) continue;
    ++r.salient;
    if (annotation.pixels()[i] != 0) ++r.overlap;
  }
  if (r.salient == 0) {
    r.empty_salient = true;
    warn("EmptySalientRegion: salient mask has no pixels; precision reported as 0");
    return r;
  }
  r.precision = static_cast<double>(r.overlap) / static_cast<double>(r.salient);
  return r;
}

}  // namespace afpb
