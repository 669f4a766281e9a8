// afpb: occlusion simulation, multi-task training and retrieval evaluation.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "afpb/config.hpp"
#include "afpb/error.hpp"
#include "afpb/experiment.hpp"
#include "afpb/report.hpp"
#include "afpb/saliency.hpp"

namespace fs = std::filesystem;
using namespace afpb;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr const char* kOutDirEnv = "AFPB_OUT_DIR";

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int jobs = 0;
  bool no_os = false;
  bool no_obc = false;
};

ExperimentConfig resolve(const CommonOptions& opt) {
  ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
  if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.out_dir = env;
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  if (opt.seed_set) cfg.seed = opt.seed;
  if (opt.jobs > 0) cfg.jobs = opt.jobs;
  if (opt.no_os) cfg.use_os = false;
  if (opt.no_obc) cfg.use_obc = false;
  cfg.validate();
  return cfg;
}

void write_provenance(const ExperimentConfig& cfg, const SeedPlan& seeds) {
  write_text(fs::path(cfg.out_dir) / "config.ini", format_config(cfg));
  write_text(fs::path(cfg.out_dir) / "seeds.tsv", format_seeds(seeds));
}

std::vector<double> cmc_ranks(const EvalReport& r) {
  std::vector<double> x;
  for (std::size_t i = 0; i < r.cmc.size(); ++i) x.push_back(static_cast<double>(i + 1));
  return x;
}

int cmd_simulate(const ExperimentConfig& cfg) {
  const SeedPlan seeds = SeedPlan::from(cfg.seed);
  write_provenance(cfg, seeds);
  std::vector<PersonSample> full_body;
  for (auto& s : load_samples(cfg, seeds)) {
    if (s.occlusion == Occlusion::FullBody) full_body.push_back(std::move(s));
  }
  OcclusionConfig oc = cfg.occlusion;
  oc.seed = seeds.occlusion;
  const auto z = build_occlusion_set(full_body, oc, 0, cfg.jobs);

  const fs::path dir = fs::path(cfg.out_dir) / "simulate";
  fs::create_directories(dir / "images");
  double mean_ratio = 0.0;
  for (std::size_t i = 0; i < z.samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.ppm", i);
    save_image(*z.samples[i].image, dir / "images" / name);
    mean_ratio += z.records[i].area_ratio;
  }
  if (!z.records.empty()) mean_ratio /= static_cast<double>(z.records.size());
  write_text(dir / "manifest.tsv", format_occlusion_manifest(full_body, z.records));
  std::cout << "samples\t" << z.samples.size() << "\nmean_area_ratio\t" << fmt_fixed(mean_ratio) << '\n';
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const SeedPlan seeds = SeedPlan::from(cfg.seed);
  write_provenance(cfg, seeds);
  const PreparedData data = prepare_data(cfg, seeds);
  const fs::path out(cfg.out_dir);
  write_text(out / "split.tsv", format_split(data));
  const TrainResult result = run_training(cfg, seeds, data);
  save_checkpoint(result.params, out / "model.ckpt");
  write_text(out / "loss_history.tsv", format_loss_history(result.history));
  std::cout << "identities\t" << data.label_map.size() << "\ntraining_images\t"
            << data.train_full.size() * (cfg.use_os ? 2 : 1) << "\niterations\t" << result.history.size()
            << '\n';
  if (!result.history.empty()) {
    std::cout << "initial_loss\t" << fmt_fixed(result.history.front().total) << "\nfinal_loss\t"
              << fmt_fixed(result.history.back().total) << '\n';
  }
  return 0;
}

void write_reports(const fs::path& out, const std::vector<EvalReport>& reports) {
  std::vector<PlotSeries> series;
  for (const auto& r : reports) {
    const std::string n = std::to_string(r.shots);
    write_text(out / ("cmc_N" + n + ".tsv"), format_cmc(r));
    write_text(out / ("trials_N" + n + ".tsv"), format_trials(r));
    std::vector<double> pct;
    for (double v : r.cmc) pct.push_back(100.0 * v);
    series.push_back({"N=" + n, cmc_ranks(r), pct});
  }
  write_text(out / "summary.tsv", format_summary(reports));
  write_text(out / "cmc.svg", svg_line_plot("CMC", "rank", "matching rate (%)", series));
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint) {
  const SeedPlan seeds = SeedPlan::from(cfg.seed);
  write_provenance(cfg, seeds);
  const fs::path out(cfg.out_dir);
  const ModelParams params = load_checkpoint(checkpoint.empty() ? out / "model.ckpt" : fs::path(checkpoint));
  const PreparedData data = prepare_data(cfg, seeds);
  const auto reports = run_evaluation(cfg, seeds, data, params);
  write_reports(out, reports);
  std::cout << format_summary(reports);
  return 0;
}

int cmd_sweep(ExperimentConfig cfg, const std::vector<double>& alphas) {
  if (!alphas.empty()) cfg.alphas = alphas;
  write_provenance(cfg, SeedPlan::from(cfg.seed));
  const auto rows = run_alpha_sweep(cfg, cfg.alphas);
  const fs::path out(cfg.out_dir);
  write_text(out / "sweep.tsv", format_sweep(rows, cfg.shots));
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < cfg.shots.size(); ++i) {
    PlotSeries s{"N=" + std::to_string(cfg.shots[i]), {}, {}};
    for (const auto& row : rows) {
      s.x.push_back(row.alpha);
      s.y.push_back(row.mean_rank1(static_cast<int>(i)));
    }
    series.push_back(std::move(s));
  }
  write_text(out / "sweep.svg", svg_line_plot("rank-1 vs alpha", "alpha", "rank-1 (%)", series));
  std::cout << format_sweep(rows, cfg.shots);
  return 0;
}

int cmd_ablation(const ExperimentConfig& cfg) {
  write_provenance(cfg, SeedPlan::from(cfg.seed));
  const auto cells = run_ablation(cfg, default_ablation_cells());
  const fs::path out(cfg.out_dir);
  write_text(out / "ablation.tsv", format_ablation(cells, cfg.shots));
  std::vector<PlotSeries> series;
  for (const auto& c : cells) {
    std::vector<EvalReport> first;
    for (const auto& rep : c.reports) first.push_back(rep.front());
    const EvalReport mean = average_reports(first);
    std::vector<double> pct;
    for (double v : mean.cmc) pct.push_back(100.0 * v);
    series.push_back({c.name, cmc_ranks(mean), pct});
  }
  write_text(out / "cmc_ablation.svg",
             svg_line_plot("CMC, N=" + std::to_string(cfg.shots.front()), "rank", "matching rate (%)", series));
  std::cout << format_ablation(cells, cfg.shots);
  return 0;
}

struct NamedCheckpoint {
  std::string name;
  fs::path path;
};

std::vector<NamedCheckpoint> parse_checkpoints(const std::vector<std::string>& specs, const fs::path& out) {
  std::vector<NamedCheckpoint> list;
  for (const auto& s : specs) {
    if (auto eq = s.find('='); eq != std::string::npos) {
      list.push_back({s.substr(0, eq), s.substr(eq + 1)});
    } else {
      list.push_back({fs::path(s).stem().string(), s});
    }
  }
  if (list.empty()) list.push_back({"model", out / "model.ckpt"});
  return list;
}

int cmd_saliency(const ExperimentConfig& cfg, const std::vector<std::string>& checkpoint_specs,
                 const std::string& images_dir) {
  const SeedPlan seeds = SeedPlan::from(cfg.seed);
  write_provenance(cfg, seeds);
  const fs::path out(cfg.out_dir);

  std::vector<PersonSample> samples;
  if (!images_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(images_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      PersonSample s;
      s.id = f.filename().string();
      s.image = std::make_shared<const Image>(load_image(f));
      fs::path m = f;
      m.replace_extension(".mask.pgm");
      if (fs::exists(m)) s.mask = std::make_shared<const Image>(load_image(m));
      samples.push_back(std::move(s));
    }
  } else {
    // Occluded test probes of the experiment.
    for (auto& s : prepare_data(cfg, seeds).test) {
      if (s.occlusion != Occlusion::FullBody) samples.push_back(std::move(s));
    }
  }

  const bool annotated = !samples.empty() && std::all_of(samples.begin(), samples.end(),
                                                         [](const PersonSample& s) { return s.mask != nullptr; });
  std::string per_sample = "# model\tsample_id\tprecision\tsalient_px\toverlap_px\n";
  std::string summary = "# model\timages\tmean_precision_per_image\n";
  for (const auto& ckpt : parse_checkpoints(checkpoint_specs, out)) {
    const ModelParams params = load_checkpoint(ckpt.path);
    const fs::path dir = out / "saliency" / ckpt.name;
    fs::create_directories(dir);
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Image& img = *samples[i].image;
      const SaliencyMap map =
          resample(saliency_map(params, prepare_input(img, params.arch)), img.width(), img.height());
      char name[32];
      std::snprintf(name, sizeof(name), "%05zu.pgm", i);
      save_image(map.to_image(), dir / name);
      if (annotated) {
        const auto p = detection_precision(binarize(map, cfg.saliency_quantile), *samples[i].mask);
        sum += p.precision;
        per_sample += ckpt.name + '\t' + samples[i].id + '\t' + fmt_fixed(p.precision) + '\t' +
                      std::to_string(p.salient) + '\t' + std::to_string(p.overlap) + '\n';
      }
    }
    std::cout << ckpt.name << "\tmaps\t" << samples.size();
    if (annotated && !samples.empty()) {
      const double mean = sum / static_cast<double>(samples.size());
      summary += ckpt.name + '\t' + std::to_string(samples.size()) + '\t' + fmt_fixed(mean) + '\n';
      std::cout << "\tmean_precision\t" << fmt_fixed(mean);
    }
    std::cout << '\n';
  }
  if (annotated) {
    write_text(out / "precision.tsv", per_sample);
    write_text(out / "precision_summary.tsv", summary);
  }
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    case ErrorCode::NonFiniteGradient:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occluded person re-identification: occlusion simulation, training and evaluation"};
  app.require_subcommand(1);

  CommonOptions opt;
  app.add_option("--config", opt.config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) {
        opt.seed = s;
        opt.seed_set = true;
      }, "master seed");
  app.add_option("--out", opt.out, "output directory (overrides $AFPB_OUT_DIR and the config)");
  app.add_option("--jobs", opt.jobs, "worker threads for feature extraction and simulation")
      ->check(CLI::PositiveNumber);
  app.add_flag("--no-os", opt.no_os, "train on the full-body set only");
  app.add_flag("--no-obc", opt.no_obc, "disable the occluded/non-occluded loss (alpha = 1)");

  auto* simulate = app.add_subcommand("simulate", "write occluded copies of every full-body image");
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  auto* eval = app.add_subcommand("eval", "CMC evaluation of a checkpoint");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint path (default <out>/model.ckpt)");

  auto* sweep = app.add_subcommand("sweep-alpha", "train and evaluate across loss weights");
  std::vector<double> alphas;
  sweep->add_option("--alphas", alphas, "comma separated alpha values")->delimiter(',');

  auto* saliency = app.add_subcommand("saliency", "saliency maps and detection precision");
  std::vector<std::string> checkpoints;
  std::string images_dir;
  saliency->add_option("--checkpoint", checkpoints, "checkpoint, optionally name=path; repeatable");
  saliency->add_option("--images", images_dir, "directory of .ppm images (masks as <stem>.mask.pgm)")
      ->check(CLI::ExistingDirectory);

  auto* report = app.add_subcommand("report", "component ablation table or alpha sweep");
  std::string mode = "ablation";
  int replicates = 0;
  report->add_option("--mode", mode, "ablation | sweep")->check(CLI::IsMember({"ablation", "sweep"}));
  report->add_option("--replicates", replicates, "seeded replicates to average")->check(CLI::PositiveNumber);
  report->add_option("--alphas", alphas, "alpha values for sweep mode")->delimiter(',');

  for (auto* sub : {simulate, train, eval, sweep, saliency, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    ExperimentConfig cfg = resolve(opt);
    if (replicates > 0) cfg.replicates = replicates;
    if (*simulate) return cmd_simulate(cfg);
    if (*train) return cmd_train(cfg);
    if (*eval) return cmd_eval(cfg, checkpoint);
    if (*sweep) return cmd_sweep(cfg, alphas);
    if (*saliency) return cmd_saliency(cfg, checkpoints, images_dir);
    if (*report) return mode == "sweep" ? cmd_sweep(cfg, alphas) : cmd_ablation(cfg);
  } catch (const Error& e) {
    std::cerr << "afpb: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "afpb: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
