#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "afpb/image.hpp"

namespace afpb {

enum class Occlusion { FullBody, ArtificialOcclusion, RealOcclusion };

std::string_view to_string(Occlusion occlusion);

/// One labelled image. Images are shared immutably so sample collections can
/// be copied, split and recombined without duplicating pixel data.
struct PersonSample {
  std::string id;
  std::shared_ptr<const Image> image;
  int identity = 0;
  Occlusion occlusion = Occlusion::FullBody;
  /// Optional body-part annotation (nonzero = body), same dims as image.
  std::shared_ptr<const Image> mask;
};

/// Target of the occluded/non-occluded head: 0 for either occlusion kind,
/// 1 for full-body samples.
constexpr int obc_target(Occlusion occlusion) noexcept {
  return occlusion == Occlusion::FullBody ? 1 : 0;
}

}  // namespace afpb
