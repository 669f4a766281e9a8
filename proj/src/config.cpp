#include "afpb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <set>
#include <sstream>

#include "afpb/error.hpp"
#include "afpb/report.hpp"

namespace afpb {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidConfig, "bad value for " + key + ": '" + text + "'");
  }
  return value;
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::InvalidConfig, "bad boolean for " + key + ": '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_value<T>(key, item));
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt_fixed(values[i], 4);
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }

  ExperimentConfig cfg;
  std::vector<int> conv_channels;
  int kernel = 3, stride = 2;
  for (const auto& c : cfg.train.arch.convs) conv_channels.push_back(c.out_channels);
  if (!cfg.train.arch.convs.empty()) {
    kernel = cfg.train.arch.convs.front().kernel;
    stride = cfg.train.arch.convs.front().stride;
  }

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorCode::InvalidConfig, "key '" + section + "' outside of a section");
    }
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const std::string value = node.data();
      if (section == "experiment") {
        if (key == "seed") cfg.seed = parse_value<std::uint64_t>(name, value);
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "split_fraction") cfg.split_fraction = parse_value<double>(name, value);
        else if (key == "shots") cfg.shots = parse_list<int>(name, value);
        else if (key == "trials") cfg.trials = parse_value<int>(name, value);
        else if (key == "use_os") cfg.use_os = parse_value<bool>(name, value);
        else if (key == "use_obc") cfg.use_obc = parse_value<bool>(name, value);
        else if (key == "jobs") cfg.jobs = parse_value<int>(name, value);
        else if (key == "alphas") cfg.alphas = parse_list<double>(name, value);
        else if (key == "replicates") cfg.replicates = parse_value<int>(name, value);
        else if (key == "multishot") {
          if (value == "min") cfg.rule = MultiShotRule::Min;
          else if (value == "mean") cfg.rule = MultiShotRule::Mean;
          else throw Error(ErrorCode::InvalidConfig, name + " must be 'min' or 'mean'");
        } else throw Error(ErrorCode::InvalidConfig, "unknown key " + name);
      } else if (section == "data") {
        if (key == "root") cfg.data.root = value;
        else if (key == "identities") cfg.data.synthetic.identities = parse_value<int>(name, value);
        else if (key == "per_identity") cfg.data.synthetic.per_identity = parse_value<int>(name, value);
        else if (key == "width") cfg.data.synthetic.width = parse_value<int>(name, value);
        else if (key == "height") cfg.data.synthetic.height = parse_value<int>(name, value);
        else throw Error(ErrorCode::InvalidConfig, "unknown key " + name);
      } else if (section == "occlusion") {
        auto& o = cfg.occlusion;
        if (key == "patch_side") o.patch_side = parse_value<int>(name, value);
        else if (key == "ratio_lo") o.ratio_lo = parse_value<double>(name, value);
        else if (key == "ratio_hi") o.ratio_hi = parse_value<double>(name, value);
        else if (key == "aspect_lo") o.aspect_lo = parse_value<double>(name, value);
        else if (key == "aspect_hi") o.aspect_hi = parse_value<double>(name, value);
        else if (key == "background_band") o.background_band = parse_value<double>(name, value);
        else if (key == "regenerate_per_epoch") o.regenerate_per_epoch = parse_value<bool>(name, value);
        else throw Error(ErrorCode::InvalidConfig, "unknown key " + name);
      } else if (section == "train") {
        auto& t = cfg.train;
        if (key == "alpha") t.alpha = parse_value<double>(name, value);
        else if (key == "learning_rate") t.learning_rate = parse_value<double>(name, value);
        else if (key == "batch_size") t.batch_size = parse_value<int>(name, value);
        else if (key == "iterations") t.iterations = parse_value<int>(name, value);
        else if (key == "input_size") t.arch.input_size = parse_value<int>(name, value);
        else if (key == "conv_channels") conv_channels = parse_list<int>(name, value);
        else if (key == "kernel") kernel = parse_value<int>(name, value);
        else if (key == "stride") stride = parse_value<int>(name, value);
        else if (key == "max_jitter") t.max_jitter = parse_value<int>(name, value);
        else if (key == "lr_decay_every") t.lr_decay_every = parse_value<int>(name, value);
        else if (key == "lr_decay_factor") t.lr_decay_factor = parse_value<double>(name, value);
        else throw Error(ErrorCode::InvalidConfig, "unknown key " + name);
      } else if (section == "saliency") {
        if (key == "quantile") cfg.saliency_quantile = parse_value<double>(name, value);
        else throw Error(ErrorCode::InvalidConfig, "unknown key " + name);
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown section [" + section + "]");
      }
    }
  }

  cfg.train.arch.convs.clear();
  for (int ch : conv_channels) cfg.train.arch.convs.push_back({ch, kernel, stride});
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::vector<int> channels;
  for (const auto& c : cfg.train.arch.convs) channels.push_back(c.out_channels);
  const int kernel = cfg.train.arch.convs.empty() ? 3 : cfg.train.arch.convs.front().kernel;
  const int stride = cfg.train.arch.convs.empty() ? 2 : cfg.train.arch.convs.front().stride;
  const auto b = [](bool v) { return v ? "true" : "false"; };

  std::ostringstream out;
  out << "[experiment]\n"
      << "seed = " << cfg.seed << '\n'
      << "out_dir = " << cfg.out_dir << '\n'
      << "split_fraction = " << fmt_fixed(cfg.split_fraction, 4) << '\n'
      << "shots = " << join_ints(cfg.shots) << '\n'
      << "trials = " << cfg.trials << '\n'
      << "use_os = " << b(cfg.use_os) << '\n'
      << "use_obc = " << b(cfg.use_obc) << '\n'
      << "multishot = " << (cfg.rule == MultiShotRule::Min ? "min" : "mean") << '\n'
      << "jobs = " << cfg.jobs << '\n'
      << "alphas = " << join_reals(cfg.alphas) << '\n'
      << "replicates = " << cfg.replicates << '\n'
      << "\n[data]\n"
      << "root = " << cfg.data.root << '\n'
      << "identities = " << cfg.data.synthetic.identities << '\n'
      << "per_identity = " << cfg.data.synthetic.per_identity << '\n'
      << "width = " << cfg.data.synthetic.width << '\n'
      << "height = " << cfg.data.synthetic.height << '\n'
      << "\n[occlusion]\n"
      << "patch_side = " << cfg.occlusion.patch_side << '\n'
      << "ratio_lo = " << fmt_fixed(cfg.occlusion.ratio_lo, 4) << '\n'
      << "ratio_hi = " << fmt_fixed(cfg.occlusion.ratio_hi, 4) << '\n'
      << "aspect_lo = " << fmt_fixed(cfg.occlusion.aspect_lo, 4) << '\n'
      << "aspect_hi = " << fmt_fixed(cfg.occlusion.aspect_hi, 4) << '\n'
      << "background_band = " << fmt_fixed(cfg.occlusion.background_band, 4) << '\n'
      << "regenerate_per_epoch = " << b(cfg.occlusion.regenerate_per_epoch) << '\n'
      << "\n[train]\n"
      << "alpha = " << fmt_fixed(cfg.train.alpha, 4) << '\n'
      << "learning_rate = " << fmt_fixed(cfg.train.learning_rate, 8) << '\n'
      << "batch_size = " << cfg.train.batch_size << '\n'
      << "iterations = " << cfg.train.iterations << '\n'
      << "input_size = " << cfg.train.arch.input_size << '\n'
      << "conv_channels = " << join_ints(channels) << '\n'
      << "kernel = " << kernel << '\n'
      << "stride = " << stride << '\n'
      << "max_jitter = " << cfg.train.max_jitter << '\n'
      << "lr_decay_every = " << cfg.train.lr_decay_every << '\n'
      << "lr_decay_factor = " << fmt_fixed(cfg.train.lr_decay_factor, 6) << '\n'
      << "\n[saliency]\n"
      << "quantile = " << fmt_fixed(cfg.saliency_quantile, 4) << '\n';
  return out.str();
}

}  // namespace afpb
