#include "afpb/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "afpb/dataset.hpp"
#include "afpb/error.hpp"
#include "afpb/parallel.hpp"

namespace afpb {

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "feature lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<int> rank_identities(std::span<const double> probe, const FeatureGallery& gallery,
                                 MultiShotRule rule) {
  if (gallery.empty()) throw Error(ErrorCode::InvalidArgument, "gallery is empty");
  std::vector<std::pair<double, int>> scored;
  scored.reserve(gallery.size());
  for (const auto& [identity, shots] : gallery) {
    if (shots.empty()) throw Error(ErrorCode::InvalidArgument, "identity without gallery features");
    double score = rule == MultiShotRule::Min ? std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& f : shots) {
      const double d = l2_distance(probe, f);
      score = rule == MultiShotRule::Min ? std::min(score, d) : score + d;
    }
    if (rule == MultiShotRule::Mean) score /= static_cast<double>(shots.size());
    scored.emplace_back(score, identity);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> order;
  order.reserve(scored.size());
  for (const auto& [score, identity] : scored) order.push_back(identity);
  return order;
}

void fill_rank_summary(EvalReport& report) {
  auto at = [&](std::size_t rank) {
    if (report.cmc.empty()) return 0.0;
    return report.cmc[std::min(rank, report.cmc.size()) - 1] * 100.0;
  };
  report.rank1 = at(1);
  report.rank5 = at(5);
  report.rank10 = at(10);
}

EvalReport cmc_curve(std::span<const ProbeFeature> probes, const FeatureGallery& gallery, int shots,
                     MultiShotRule rule) {
  if (probes.empty()) throw Error(ErrorCode::InvalidArgument, "no probes to evaluate");
  EvalReport report;
  report.shots = shots;
  report.trials = 1;
  report.probes = static_cast<int>(probes.size());
  std::vector<long long> hits(gallery.size(), 0);
  for (const auto& p : probes) {
    if (!gallery.contains(p.identity)) {
      throw Error(ErrorCode::UnknownProbeIdentity,
                  "probe identity " + std::to_string(p.identity) + " missing from gallery");
    }
    const auto order = rank_identities(p.feature, gallery, rule);
    const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), p.identity) - order.begin());
    ++hits[pos];
  }
  report.cmc.resize(gallery.size());
  long long running = 0;
  for (std::size_t r = 0; r < hits.size(); ++r) {
    running += hits[r];
    report.cmc[r] = static_cast<double>(running) / static_cast<double>(probes.size());
  }
  fill_rank_summary(report);
  return report;
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to average");
  EvalReport out;
  out.shots = reports.front().shots;
  out.probes = reports.front().probes;
  out.trials = 0;
  out.cmc.assign(reports.front().cmc.size(), 0.0);
  for (const auto& r : reports) {
    if (r.cmc.size() != out.cmc.size()) {
      throw Error(ErrorCode::LengthMismatch, "CMC curves of different length cannot be averaged");
    }
    for (std::size_t i = 0; i < r.cmc.size(); ++i) out.cmc[i] += r.cmc[i];
    out.trials += r.trials;
    out.trial_seeds.insert(out.trial_seeds.end(), r.trial_seeds.begin(), r.trial_seeds.end());
    out.trial_records.insert(out.trial_records.end(), r.trial_records.begin(), r.trial_records.end());
  }
  for (double& v : out.cmc) v /= static_cast<double>(reports.size());
  fill_rank_summary(out);
  return out;
}

std::map<std::string, Feature> extract_features(const ModelParams& params,
                                                const std::vector<PersonSample>& samples, int jobs) {
  std::vector<Feature> features(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    features[i] = extract_feature(params, prepare_input(*samples[i].image, params.arch));
  });
  std::map<std::string, Feature> out;
  for (std::size_t i = 0; i < samples.size(); ++i) out.emplace(samples[i].id, std::move(features[i]));
  return out;
}

EvalReport evaluate(const ModelParams& params, const std::vector<PersonSample>& test, int shots,
                    int trials, std::uint64_t seed, const EvalOptions& options) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const auto features = extract_features(params, test, options.jobs);

  std::vector<EvalReport> per_trial;
  per_trial.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    Rng rng(trial_seed);
    const ProbeGallery pg = make_probe_gallery(test, shots, rng);

    TrialRecord record;
    record.seed = trial_seed;
    FeatureGallery gallery;
    for (const auto& [identity, samples] : pg.gallery) {
      for (const auto& s : samples) {
        gallery[identity].push_back(features.at(s.id));
        record.gallery_ids.push_back(s.id);
      }
    }
    std::vector<ProbeFeature> probes;
    for (const auto& p : pg.probes) {
      probes.push_back({features.at(p.id), p.identity});
      record.probe_ids.push_back(p.id);
    }
    EvalReport r = cmc_curve(probes, gallery, shots, options.rule);
    r.trial_seeds = {trial_seed};
    r.trial_records = {std::move(record)};
    per_trial.push_back(std::move(r));
  }
  return average_reports(per_trial);
}

}  // namespace afpb
