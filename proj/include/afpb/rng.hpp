#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace afpb {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a base
/// seed, e.g. one generator per sample or per evaluation trial.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(base ^ mix64(stream + 0x632BE59BD9B4E019ull));
}

/// Seeded generator with platform-independent distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The std distributions are not (their algorithms are left to the
/// implementation), so bounded integers use rejection sampling on the raw
/// 64-bit output and reals use the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi]; requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Uniform real in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Fisher-Yates, drawing from uniform_int so the permutation is portable.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace afpb
