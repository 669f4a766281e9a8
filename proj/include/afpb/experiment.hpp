#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "afpb/dataset.hpp"
#include "afpb/evaluate.hpp"
#include "afpb/model.hpp"
#include "afpb/occsim.hpp"

namespace afpb {

struct DataConfig {
  /// Dataset root in the occluded/ + whole/ layout; empty selects the
  /// synthetic generator.
  std::string root;
  SyntheticConfig synthetic;
};

/// Everything one run depends on besides input files.
struct ExperimentConfig {
  DataConfig data;
  OcclusionConfig occlusion;
  TrainConfig train;
  std::vector<int> shots{1};
  int trials = 10;
  std::uint64_t seed = 0;
  double split_fraction = 0.5;
  std::string out_dir = "afpb_out";
  bool use_os = true;
  bool use_obc = true;
  MultiShotRule rule = MultiShotRule::Min;
  int jobs = 1;
  std::vector<double> alphas{0.5, 0.6, 0.7, 0.8, 0.9};
  int replicates = 1;
  double saliency_quantile = 0.5;

  void validate() const;
};

/// Seeds derived from the master seed, one per pipeline stage.
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t occlusion = 0;
  std::uint64_t probe_occlusion = 0;
  std::uint64_t train = 0;
  std::uint64_t eval = 0;

  static SeedPlan from(std::uint64_t master);
};

/// Replicate r of an experiment runs with master seed derive_seed(seed, 100 + r).
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

struct PreparedData {
  Split split;
  /// Original identity -> contiguous training label 1..K.
  std::map<int, int> label_map;
  /// Full-body training images (set X) with remapped labels.
  std::vector<PersonSample> train_full;
  /// Test identities: full-body gallery candidates plus occluded probes.
  std::vector<PersonSample> test;
  /// Records of the occlusions applied to synthetic probes (empty for real data).
  std::vector<OcclusionRecord> probe_records;
};

/// Loads all samples: scans data.root, or renders the synthetic set.
std::vector<PersonSample> load_samples(const ExperimentConfig& cfg, const SeedPlan& seeds);

/// Identity split and role assignment. For synthetic data the first half of
/// each test identity's images stays full-body and the rest become occluded
/// probes through the occlusion simulator with the held-out probe seed.
PreparedData prepare_data(const ExperimentConfig& cfg, const SeedPlan& seeds);

/// The effective training configuration: seeded from the plan, alpha forced
/// to 1 when the OBC loss is disabled.
TrainConfig effective_train_config(const ExperimentConfig& cfg, const SeedPlan& seeds);

/// Trains on X (use_os = false) or on O = X + Z (use_os = true). The
/// returned params are rounded through f32 so they equal a checkpoint
/// round trip.
TrainResult run_training(const ExperimentConfig& cfg, const SeedPlan& seeds, const PreparedData& data);

/// One report per configured shot count.
std::vector<EvalReport> run_evaluation(const ExperimentConfig& cfg, const SeedPlan& seeds,
                                       const PreparedData& data, const ModelParams& params);

struct AblationCell {
  std::string name;
  bool use_os = false;
  bool use_obc = false;
  /// [replicate][shot index] reports.
  std::vector<std::vector<EvalReport>> reports;

  /// Mean over replicates of rank-k at the given shot index.
  double mean_rank(int shot_index, int k) const;
};

/// The four cells of the component ablation: baseline, +OS, +multi-task
/// losses, both.
std::vector<AblationCell> default_ablation_cells();

std::vector<AblationCell> run_ablation(const ExperimentConfig& cfg, std::vector<AblationCell> cells);

struct SweepRow {
  double alpha = 0.0;
  /// [replicate][shot index]
  std::vector<std::vector<EvalReport>> reports;

  double mean_rank1(int shot_index) const;
};

/// Rows sorted by alpha. Uses cfg.use_os / cfg.use_obc as given.
std::vector<SweepRow> run_alpha_sweep(const ExperimentConfig& cfg, std::vector<double> alphas);

}  // namespace afpb
