#include "afpb/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "afpb/error.hpp"

namespace afpb {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw Error(ErrorCode::InvalidArgument, "uniform_int: lo > hi");
  const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::int64_t>(engine_());
  }
  const std::uint64_t range = span + 1;
  // Largest multiple of range representable; reject draws above it.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
  std::uint64_t draw = engine_();
  while (draw > limit) draw = engine_();
  return lo + static_cast<std::int64_t>(draw % range);
}

double Rng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace afpb
