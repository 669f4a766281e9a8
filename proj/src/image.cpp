#include "afpb/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "afpb/error.hpp"

namespace afpb {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1 || channels < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1 || channels < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::ShapeMismatch, "pixel buffer length does not match dimensions");
  }
}

std::uint8_t quantize(double value) noexcept {
  if (!(value > 0.0)) return 0;  // also maps NaN to 0
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(value + 0.5));
}

namespace {

// Skips whitespace and '#' comments between PNM header tokens.
int read_header_int(std::istream& in, const std::string& path) {
  for (;;) {
    int c = in.peek();
    if (c == EOF) throw Error(ErrorCode::CorruptData, "truncated header in " + path);
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value) || value < 1) {
    throw Error(ErrorCode::CorruptData, "bad header field in " + path);
  }
  return value;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());

  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a binary PPM/PGM");
  }
  const int channels = magic[1] == '6' ? 3 : 1;
  const int width = read_header_int(in, path.string());
  const int height = read_header_int(in, path.string());
  const int maxval = read_header_int(in, path.string());
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": only maxval 255 is supported");
  }
  if (!std::isspace(in.get())) throw Error(ErrorCode::CorruptData, "missing header terminator in " + path.string());

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw Error(ErrorCode::CorruptData, "truncated pixel data in " + path.string());
  }
  return Image(width, height, channels, std::move(pixels));
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::UnsupportedFormat, "only 1- or 3-channel images can be written");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot open for writing: " + path.string());
  out << (img.channels() == 3 ? "P6" : "P5") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << 255 << '\n';
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.size()));
  if (!out) throw Error(ErrorCode::CorruptData, "write failed: " + path.string());
}

Image crop(const Image& img, const Rect& r) {
  if (!r.fits(img.width(), img.height())) {
    throw Error(ErrorCode::OutOfBounds, "crop rect outside image");
  }
  const int ch = img.channels();
  Image out(r.w, r.h, ch);
  for (int v = 0; v < r.h; ++v) {
    const auto* src = &img.pixels()[(static_cast<std::size_t>(r.y + v) * img.width() + r.x) * ch];
    std::copy_n(src, static_cast<std::size_t>(r.w) * ch, &out.at(0, v));
  }
  return out;
}

Image resize(const Image& img, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "resize target must be >= 1");
  if (width == img.width() && height == img.height()) return img;

  const int ch = img.channels();
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  Image out(width, height, ch);
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        const double bottom = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = quantize(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

Image paste(const Image& base, const Image& patch, int x, int y) {
  if (patch.channels() != base.channels()) {
    throw Error(ErrorCode::ShapeMismatch, "paste: channel count differs");
  }
  const Rect r{x, y, patch.width(), patch.height()};
  if (!r.fits(base.width(), base.height())) {
    throw Error(ErrorCode::OutOfBounds, "paste: patch does not fit at the given position");
  }
  Image out = base;
  const int ch = base.channels();
  for (int v = 0; v < r.h; ++v) {
    std::copy_n(&patch.pixels()[static_cast<std::size_t>(v) * r.w * ch],
                static_cast<std::size_t>(r.w) * ch, &out.at(x, y + v));
  }
  return out;
}

Image jittered_center_crop(const Image& img, int side, int max_jitter, Rng& rng) {
  if (side < 1 || max_jitter < 0) throw Error(ErrorCode::InvalidArgument, "bad crop parameters");
  if (side + 2 * max_jitter > std::min(img.width(), img.height())) {
    throw Error(ErrorCode::InsufficientSize, "image too small for crop side plus jitter");
  }
  int x = (img.width() - side) / 2;
  int y = (img.height() - side) / 2;
  if (max_jitter > 0) {
    x += static_cast<int>(rng.uniform_int(-max_jitter, max_jitter));
    y += static_cast<int>(rng.uniform_int(-max_jitter, max_jitter));
  }
  return crop(img, Rect{x, y, side, side});
}

std::vector<double> to_unit(const Image& img) {
  std::vector<double> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  return out;
}

Image from_unit(std::span<const double> values, int width, int height, int channels) {
  std::vector<std::uint8_t> pixels(values.size());
  std::transform(values.begin(), values.end(), pixels.begin(),
                 [](double v) { return quantize(v * 255.0); });
  return Image(width, height, channels, std::move(pixels));
}

}  // namespace afpb

namespace afpb {

std::vector<double> resize_plane(std::span<const double> plane, int width, int height, int out_width,
                                 int out_height) {
  if (width < 1 || height < 1 || out_width < 1 || out_height < 1) {
    throw Error(ErrorCode::InvalidArgument, "resize_plane: dims must be >= 1");
  }
  if (plane.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::ShapeMismatch, "resize_plane: plane length does not match dims");
  }
  std::vector<double> out(static_cast<std::size_t>(out_width) * out_height);
  const double sx = static_cast<double>(width) / out_width;
  const double sy = static_cast<double>(height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, width - 1);
      const double wx = fx - x0;
      const double top = plane[y0 * width + x0] * (1.0 - wx) + plane[y0 * width + x1] * wx;
      const double bottom = plane[y1 * width + x0] * (1.0 - wx) + plane[y1 * width + x1] * wx;
      out[static_cast<std::size_t>(y) * out_width + x] = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

}  // namespace afpb
