#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "afpb/rng.hpp"
#include "afpb/sample.hpp"

namespace afpb {

struct Split {
  std::set<int> train_identities;
  std::set<int> test_identities;
};

struct ProbeGallery {
  std::vector<PersonSample> probes;
  std::map<int, std::vector<PersonSample>> gallery;
  int shots = 1;
};

/// Reads `<root>/occluded/<identity>/*` and `<root>/whole/<identity>/*`.
///
/// Only .ppm/.pgm/.pnm files are samples; `<stem>.mask.pgm` next to an image
/// is attached as its body-part annotation. Identity directories must be
/// decimal numbers. Samples are ordered lexicographically by relative path,
/// which is also their id.
std::vector<PersonSample> scan_dataset(const std::filesystem::path& root);

/// Writes samples back in the scan_dataset layout (FullBody under whole/,
/// either occlusion kind under occluded/), masks alongside.
void write_dataset(const std::vector<PersonSample>& samples, const std::filesystem::path& root);

std::set<int> identities_of(const std::vector<PersonSample>& samples);
std::vector<PersonSample> filter_identities(const std::vector<PersonSample>& samples,
                                            const std::set<int>& identities);

/// round-half-up(M * fraction) train identities chosen uniformly without
/// replacement (clamped so both sides are non-empty); the rest are test.
Split split_identities(const std::vector<PersonSample>& samples, double fraction, Rng& rng);

/// Probes are every occluded sample (RealOcclusion when any exist, otherwise
/// ArtificialOcclusion); the gallery draws N full-body images per identity
/// without replacement.
ProbeGallery make_probe_gallery(const std::vector<PersonSample>& test, int shots, Rng& rng);

struct SyntheticConfig {
  int identities = 20;
  int per_identity = 10;
  int width = 32;
  int height = 64;
};

/// Renders person-like templates (head, torso, legs) whose torso and leg hues
/// jointly identify the person, over noisy backgrounds with pose and
/// illumination jitter. Identities are labelled 1..M, all samples FullBody,
/// each carrying its body mask. The top quarter of every image is background.
std::vector<PersonSample> generate_synthetic_dataset(const SyntheticConfig& cfg, Rng& rng);

}  // namespace afpb
