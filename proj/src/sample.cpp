#include "afpb/sample.hpp"

namespace afpb {

std::string_view to_string(Occlusion occlusion) {
  switch (occlusion) {
    case Occlusion::FullBody: return "full_body";
    case Occlusion::ArtificialOcclusion: return "artificial_occlusion";
    case Occlusion::RealOcclusion: return "real_occlusion";
  }
  return "unknown";
}

}  // namespace afpb
