#include "afpb/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "afpb/error.hpp"

namespace afpb {

void ExperimentConfig::validate() const {
  if (shots.empty()) throw Error(ErrorCode::InvalidConfig, "at least one shot count is required");
  for (int n : shots) {
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "shot counts must be >= 1");
  }
  if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "split fraction must be in (0, 1)");
  }
  if (jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
  if (replicates < 1) throw Error(ErrorCode::InvalidConfig, "replicates must be >= 1");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidConfig, "sweep alphas must be in [0, 1]");
  }
  if (!(saliency_quantile > 0.0 && saliency_quantile < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "saliency quantile must be in (0, 1)");
  }
  if (!(train.alpha >= 0.0 && train.alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must be in [0, 1]");
  }
  occlusion.validate();
  train.arch.validate();
}

SeedPlan SeedPlan::from(std::uint64_t master) {
  SeedPlan s;
  s.master = master;
  s.data = derive_seed(master, 1);
  s.split = derive_seed(master, 2);
  s.occlusion = derive_seed(master, 3);
  s.probe_occlusion = derive_seed(master, 4);
  s.train = derive_seed(master, 5);
  s.eval = derive_seed(master, 6);
  return s;
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  return replicate == 0 ? seed : derive_seed(seed, 100 + static_cast<std::uint64_t>(replicate));
}

std::vector<PersonSample> load_samples(const ExperimentConfig& cfg, const SeedPlan& seeds) {
  if (!cfg.data.root.empty()) return scan_dataset(cfg.data.root);
  Rng rng(seeds.data);
  return generate_synthetic_dataset(cfg.data.synthetic, rng);
}

PreparedData prepare_data(const ExperimentConfig& cfg, const SeedPlan& seeds) {
  const auto samples = load_samples(cfg, seeds);
  PreparedData data;
  Rng split_rng(seeds.split);
  data.split = split_identities(samples, cfg.split_fraction, split_rng);

  int next = 1;
  for (int identity : data.split.train_identities) data.label_map[identity] = next++;
  for (const auto& s : samples) {
    if (s.occlusion != Occlusion::FullBody || !data.split.train_identities.contains(s.identity)) continue;
    PersonSample copy = s;
    copy.identity = data.label_map.at(s.identity);
    data.train_full.push_back(std::move(copy));
  }

  const bool has_occluded = std::any_of(samples.begin(), samples.end(), [](const PersonSample& s) {
    return s.occlusion != Occlusion::FullBody;
  });
  const auto test_samples = filter_identities(samples, data.split.test_identities);
  if (has_occluded) {
    data.test = test_samples;
    return data;
  }

  // No occluded images on disk: keep the first half of each identity as
  // full-body gallery candidates and occlude the rest as probes.
  std::map<int, std::vector<PersonSample>> by_identity;
  for (const auto& s : test_samples) by_identity[s.identity].push_back(s);
  std::vector<PersonSample> to_occlude;
  for (auto& [identity, list] : by_identity) {
    const std::size_t keep = (list.size() + 1) / 2;
    for (std::size_t i = 0; i < list.size(); ++i) {
      (i < keep ? data.test : to_occlude).push_back(list[i]);
    }
  }
  OcclusionConfig probe_cfg = cfg.occlusion;
  probe_cfg.seed = seeds.probe_occlusion;
  auto occluded = build_occlusion_set(to_occlude, probe_cfg, 0, cfg.jobs);
  data.test.insert(data.test.end(), occluded.samples.begin(), occluded.samples.end());
  data.probe_records = std::move(occluded.records);
  return data;
}

TrainConfig effective_train_config(const ExperimentConfig& cfg, const SeedPlan& seeds) {
  TrainConfig tc = cfg.train;
  tc.seed = seeds.train;
  if (!cfg.use_obc) tc.alpha = 1.0;
  return tc;
}

TrainResult run_training(const ExperimentConfig& cfg, const SeedPlan& seeds, const PreparedData& data) {
  const TrainConfig tc = effective_train_config(cfg, seeds);
  TrainResult result;
  if (!cfg.use_os) {
    result = train(data.train_full, tc);
  } else {
    OcclusionConfig oc = cfg.occlusion;
    oc.seed = seeds.occlusion;
    const auto z = build_occlusion_set(data.train_full, oc, 0, cfg.jobs);
    EpochResampler resample;
    if (oc.regenerate_per_epoch) {
      resample = [&](int epoch) {
        return combine(data.train_full, build_occlusion_set(data.train_full, oc, epoch, cfg.jobs).samples);
      };
    }
    result = train(combine(data.train_full, z.samples), tc, resample);
  }
  result.params = round_to_f32(result.params);
  return result;
}

std::vector<EvalReport> run_evaluation(const ExperimentConfig& cfg, const SeedPlan& seeds,
                                       const PreparedData& data, const ModelParams& params) {
  std::vector<EvalReport> reports;
  for (int n : cfg.shots) {
    reports.push_back(evaluate(params, data.test, n, cfg.trials, seeds.eval, {cfg.rule, cfg.jobs}));
  }
  return reports;
}

double AblationCell::mean_rank(int shot_index, int k) const {
  if (reports.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rep : reports) {
    const auto& r = rep.at(static_cast<std::size_t>(shot_index));
    sum += k == 1 ? r.rank1 : k == 5 ? r.rank5 : r.rank10;
  }
  return sum / static_cast<double>(reports.size());
}

std::vector<AblationCell> default_ablation_cells() {
  return {
      {"baseline", false, false, {}},
      {"occlusion_simulator", true, false, {}},
      {"multi_task_losses", false, true, {}},
      {"afpb", true, true, {}},
  };
}

std::vector<AblationCell> run_ablation(const ExperimentConfig& cfg, std::vector<AblationCell> cells) {
  cfg.validate();
  for (int r = 0; r < cfg.replicates; ++r) {
    const SeedPlan seeds = SeedPlan::from(replicate_seed(cfg.seed, r));
    const PreparedData data = prepare_data(cfg, seeds);
    for (auto& cell : cells) {
      ExperimentConfig c = cfg;
      c.use_os = cell.use_os;
      c.use_obc = cell.use_obc;
      const auto trained = run_training(c, seeds, data);
      cell.reports.push_back(run_evaluation(c, seeds, data, trained.params));
    }
  }
  return cells;
}

double SweepRow::mean_rank1(int shot_index) const {
  if (reports.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rep : reports) sum += rep.at(static_cast<std::size_t>(shot_index)).rank1;
  return sum / static_cast<double>(reports.size());
}

std::vector<SweepRow> run_alpha_sweep(const ExperimentConfig& cfg, std::vector<double> alphas) {
  cfg.validate();
  std::sort(alphas.begin(), alphas.end());
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidConfig, "sweep alphas must be in [0, 1]");
  }
  std::vector<SweepRow> rows;
  for (double a : alphas) rows.push_back({a, {}});
  for (int r = 0; r < cfg.replicates; ++r) {
    const SeedPlan seeds = SeedPlan::from(replicate_seed(cfg.seed, r));
    const PreparedData data = prepare_data(cfg, seeds);
    for (auto& row : rows) {
      ExperimentConfig c = cfg;
      c.train.alpha = row.alpha;
      const auto trained = run_training(c, seeds, data);
      row.reports.push_back(run_evaluation(c, seeds, data, trained.params));
    }
  }
  return rows;
}

}  // namespace afpb
