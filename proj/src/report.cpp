#include "afpb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "afpb/error.hpp"

namespace afpb {

std::string fmt_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  std::string out = buf;
  // Values that round to zero print without a sign.
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::CorruptData, "write failed: " + path.string());
}

namespace {

std::string rect_cols(const Rect& r) {
  return std::to_string(r.x) + '\t' + std::to_string(r.y) + '\t' + std::to_string(r.w) + '\t' +
         std::to_string(r.h);
}

}  // namespace

std::string format_occlusion_manifest(const std::vector<PersonSample>& sources,
                                      const std::vector<OcclusionRecord>& records) {
  std::ostringstream out;
  out << "# source_id\tlabel\tpatch_x\tpatch_y\tpatch_w\tpatch_h\ttarget_x\ttarget_y\ttarget_w\ttarget_h"
         "\tarea_ratio\tseed\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << r.source_id << '\t' << sources.at(i).identity << '\t' << rect_cols(r.patch_rect) << '\t'
        << rect_cols(r.target_rect) << '\t' << fmt_fixed(r.area_ratio) << '\t' << r.seed << '\n';
  }
  return out.str();
}

std::string format_loss_history(const std::vector<LossRecord>& history) {
  std::ostringstream out;
  out << "# iteration\ttotal\tid_loss\tobc_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << i << '\t' << fmt_fixed(history[i].total, 9) << '\t' << fmt_fixed(history[i].id, 9) << '\t'
        << fmt_fixed(history[i].obc, 9) << '\n';
  }
  return out.str();
}

std::string format_cmc(const EvalReport& report) {
  std::ostringstream out;
  out << "# rank\trate\n";
  for (std::size_t r = 0; r < report.cmc.size(); ++r) out << r + 1 << '\t' << fmt_fixed(report.cmc[r]) << '\n';
  return out.str();
}

std::string format_summary(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "# shots\ttrials\tprobes\trank1\trank5\trank10\n";
  for (const auto& r : reports) {
    out << r.shots << '\t' << r.trials << '\t' << r.probes << '\t' << fmt_fixed(r.rank1, 2) << '\t'
        << fmt_fixed(r.rank5, 2) << '\t' << fmt_fixed(r.rank10, 2) << '\n';
  }
  return out.str();
}

std::string format_trials(const EvalReport& report) {
  std::ostringstream out;
  out << "# trial\tseed\trole\tsample_id\n";
  for (std::size_t t = 0; t < report.trial_records.size(); ++t) {
    const auto& rec = report.trial_records[t];
    for (const auto& id : rec.probe_ids) out << t << '\t' << rec.seed << "\tprobe\t" << id << '\n';
    for (const auto& id : rec.gallery_ids) out << t << '\t' << rec.seed << "\tgallery\t" << id << '\n';
  }
  return out.str();
}

std::string format_split(const PreparedData& data) {
  std::ostringstream out;
  out << "# identity\trole\ttrain_label\n";
  for (int id : data.split.train_identities) out << id << "\ttrain\t" << data.label_map.at(id) << '\n';
  for (int id : data.split.test_identities) out << id << "\ttest\t-\n";
  return out.str();
}

std::string format_seeds(const SeedPlan& s) {
  std::ostringstream out;
  out << "# stage\tseed\n"
      << "master\t" << s.master << '\n'
      << "data\t" << s.data << '\n'
      << "split\t" << s.split << '\n'
      << "occlusion\t" << s.occlusion << '\n'
      << "probe_occlusion\t" << s.probe_occlusion << '\n'
      << "train\t" << s.train << '\n'
      << "eval\t" << s.eval << '\n';
  return out.str();
}

std::string format_ablation(const std::vector<AblationCell>& cells, const std::vector<int>& shots) {
  std::ostringstream out;
  out << "# method\tuse_os\tuse_obc";
  for (int n : shots) out << "\tN" << n << "_r1\tN" << n << "_r5\tN" << n << "_r10";
  out << '\n';
  for (const auto& c : cells) {
    out << c.name << '\t' << (c.use_os ? 1 : 0) << '\t' << (c.use_obc ? 1 : 0);
    for (std::size_t i = 0; i < shots.size(); ++i) {
      const int si = static_cast<int>(i);
      out << '\t' << fmt_fixed(c.mean_rank(si, 1), 2) << '\t' << fmt_fixed(c.mean_rank(si, 5), 2) << '\t'
          << fmt_fixed(c.mean_rank(si, 10), 2);
    }
    out << '\n';
  }
  return out.str();
}

std::string format_sweep(const std::vector<SweepRow>& rows, const std::vector<int>& shots) {
  std::ostringstream out;
  out << "# alpha";
  for (int n : shots) out << "\tN" << n << "_rank1";
  out << '\n';
  for (const auto& row : rows) {
    out << fmt_fixed(row.alpha, 4);
    for (std::size_t i = 0; i < shots.size(); ++i) out << '\t' << fmt_fixed(row.mean_rank1(static_cast<int>(i)), 2);
    out << '\n';
  }
  return out.str();
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  constexpr double width = 640, height = 420, left = 70, right = 160, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  y_min = std::min(y_min, 0.0);
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max <= y_min) y_max = y_min + 1;
  const auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) { return top + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 4.0;
    const double yv = y_min + (y_max - y_min) * t / 4.0;
    out << "<text x=\"" << fmt_fixed(px(xv), 1) << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\">" << fmt_fixed(xv, 2) << "</text>\n"
        << "<text x=\"" << left - 8 << "\" y=\"" << fmt_fixed(py(yv) + 4, 1) << "\" text-anchor=\"end\">"
        << fmt_fixed(yv, 2) << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\">" << x_label
      << "</text>\n"
      << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % std::size(palette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      out << (i ? " " : "") << fmt_fixed(px(s.x[i]), 1) << ',' << fmt_fixed(py(s.y[i]), 1);
    }
    out << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(si);
    out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly + 4 << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace afpb
