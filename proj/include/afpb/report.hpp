#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "afpb/evaluate.hpp"
#include "afpb/experiment.hpp"
#include "afpb/model.hpp"
#include "afpb/occsim.hpp"

namespace afpb {

// All tables are tab-separated with a single '#'-prefixed header line.

void write_text(const std::filesystem::path& path, const std::string& text);

std::string format_occlusion_manifest(const std::vector<PersonSample>& sources,
                                      const std::vector<OcclusionRecord>& records);
std::string format_loss_history(const std::vector<LossRecord>& history);
std::string format_cmc(const EvalReport& report);
/// One row per report: shots, trials, probes, rank-1/5/10.
std::string format_summary(const std::vector<EvalReport>& reports);
std::string format_trials(const EvalReport& report);
std::string format_split(const PreparedData& data);
std::string format_seeds(const SeedPlan& seeds);
std::string format_ablation(const std::vector<AblationCell>& cells, const std::vector<int>& shots);
std::string format_sweep(const std::vector<SweepRow>& rows, const std::vector<int>& shots);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal standalone SVG line chart.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

/// Fixed-point formatting used in every table so outputs are byte-stable.
std::string fmt_fixed(double value, int digits = 6);

}  // namespace afpb
