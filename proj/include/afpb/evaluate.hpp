#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "afpb/model.hpp"
#include "afpb/sample.hpp"

namespace afpb {

/// How an identity's N gallery distances collapse to one score.
enum class MultiShotRule { Min, Mean };

using Feature = std::vector<double>;
using FeatureGallery = std::map<int, std::vector<Feature>>;

struct ProbeFeature {
  Feature feature;
  int identity = 0;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::vector<std::string> probe_ids;
  std::vector<std::string> gallery_ids;  // grouped by identity, ascending
};

struct EvalReport {
  int shots = 1;
  int trials = 1;
  int probes = 0;
  /// cmc[r] = fraction of probes whose identity is within the top r + 1.
  std::vector<double> cmc;
  double rank1 = 0.0;  // percentages
  double rank5 = 0.0;
  double rank10 = 0.0;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<TrialRecord> trial_records;
};

double l2_distance(std::span<const double> a, std::span<const double> b);

/// Gallery identities ordered by ascending score, ties by ascending label.
std::vector<int> rank_identities(std::span<const double> probe, const FeatureGallery& gallery,
                                 MultiShotRule rule = MultiShotRule::Min);

/// Single-trial CMC over every probe.
EvalReport cmc_curve(std::span<const ProbeFeature> probes, const FeatureGallery& gallery, int shots,
                     MultiShotRule rule = MultiShotRule::Min);

/// Fills rank1/5/10 from cmc. Ranks beyond the gallery size read the final
/// value (1.0).
void fill_rank_summary(EvalReport& report);

/// Pointwise mean of equally long curves; trial seeds and records are
/// concatenated.
EvalReport average_reports(std::span<const EvalReport> reports);

struct EvalOptions {
  MultiShotRule rule = MultiShotRule::Min;
  int jobs = 1;
};

/// T trials; trial t draws its probe/gallery split from
/// Rng(derive_seed(seed, t)). Features are extracted once per test image.
EvalReport evaluate(const ModelParams& params, const std::vector<PersonSample>& test, int shots,
                    int trials, std::uint64_t seed, const EvalOptions& options = {});

/// Features keyed by sample id.
std::map<std::string, Feature> extract_features(const ModelParams& params,
                                                const std::vector<PersonSample>& samples, int jobs = 1);

}  // namespace afpb
