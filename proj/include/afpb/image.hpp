#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "afpb/rng.hpp"

namespace afpb {

/// Row-major interleaved 8-bit raster: index ((y * width) + x) * channels + c.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);
  Image(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t size() const noexcept { return pixels_.size(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  long long area() const noexcept { return static_cast<long long>(w) * h; }
  bool contains(int px, int py) const noexcept {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  bool fits(int width, int height) const noexcept {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width && y + h <= height;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Reads binary PPM (P6, 3 channels) or PGM (P5, 1 channel) with maxval 255.
Image load_image(const std::filesystem::path& path);
/// Writes P6 for 3-channel images and P5 for 1-channel images.
void save_image(const Image& img, const std::filesystem::path& path);

Image crop(const Image& img, const Rect& r);
/// Bilinear, half-pixel centers, sample coordinates clamped to the edge.
Image resize(const Image& img, int width, int height);
/// Returns a copy of base with patch written at (x, y).
Image paste(const Image& base, const Image& patch, int x, int y);

/// Crops side x side around the center, offset by independent uniform integer
/// jitter in [-max_jitter, max_jitter] on each axis.
Image jittered_center_crop(const Image& img, int side, int max_jitter, Rng& rng);

/// 8-bit storage to unit-interval reals, same layout.
std::vector<double> to_unit(const Image& img);
/// Inverse of to_unit: scales by 255, rounds half away from zero, clamps.
Image from_unit(std::span<const double> values, int width, int height, int channels);

/// Round half away from zero and clamp into [0, 255].
std::uint8_t quantize(double value) noexcept;

}  // namespace afpb

namespace afpb {

/// Bilinear resampling of a single real-valued plane with the same sampling
/// convention as resize(), without quantization.
std::vector<double> resize_plane(std::span<const double> plane, int width, int height, int out_width,
                                 int out_height);

}  // namespace afpb
