#include "afpb/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "afpb/error.hpp"

namespace afpb {

namespace fs = std::filesystem;

namespace {

bool is_mask_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 9 && name.ends_with(".mask.pgm");
}

bool is_image_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") && !is_mask_file(p);
}

int parse_identity(const std::string& name) {
  if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(ErrorCode::UnparsableIdentity, "identity directory '" + name + "' is not a number");
  }
  try {
    return std::stoi(name);
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::UnparsableIdentity, "identity directory '" + name + "' out of range");
  }
}

fs::path mask_path_for(const fs::path& image) {
  fs::path m = image;
  m.replace_extension(".mask.pgm");
  return m;
}

}  // namespace

std::vector<PersonSample> scan_dataset(const fs::path& root) {
  struct Branch {
    const char* name;
    Occlusion occlusion;
  };
  constexpr std::array branches{Branch{"occluded", Occlusion::RealOcclusion},
                                Branch{"whole", Occlusion::FullBody}};
  for (const auto& b : branches) {
    if (!fs::is_directory(root / b.name)) {
      throw Error(ErrorCode::MissingBranch, (root / b.name).string() + " is not a directory");
    }
  }

  struct Entry {
    fs::path rel;
    Occlusion occlusion;
    int identity;
  };
  std::vector<Entry> entries;
  for (const auto& b : branches) {
    for (const auto& id_dir : fs::directory_iterator(root / b.name)) {
      if (!id_dir.is_directory()) continue;
      const int identity = parse_identity(id_dir.path().filename().string());
      for (const auto& file : fs::directory_iterator(id_dir.path())) {
        if (!file.is_regular_file() || !is_image_file(file.path())) continue;
        entries.push_back({fs::relative(file.path(), root), b.occlusion, identity});
      }
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.rel.generic_string() < b.rel.generic_string(); });

  std::vector<PersonSample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    const fs::path full = root / e.rel;
    PersonSample s;
    s.id = e.rel.generic_string();
    s.identity = e.identity;
    s.occlusion = e.occlusion;
    try {
      s.image = std::make_shared<const Image>(load_image(full));
      if (const fs::path m = mask_path_for(full); fs::exists(m)) {
        s.mask = std::make_shared<const Image>(load_image(m));
      }
    } catch (const Error& err) {
      throw Error(err.code(), full.string() + ": " + err.detail());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_dataset(const std::vector<PersonSample>& samples, const fs::path& root) {
  fs::create_directories(root / "occluded");
  fs::create_directories(root / "whole");
  std::map<std::pair<int, bool>, int> counters;
  for (const auto& s : samples) {
    const bool occluded = s.occlusion != Occlusion::FullBody;
    char id_dir[32];
    std::snprintf(id_dir, sizeof(id_dir), "%03d", s.identity);
    const fs::path dir = root / (occluded ? "occluded" : "whole") / id_dir;
    fs::create_directories(dir);
    char name[32];
    std::snprintf(name, sizeof(name), "%04d", counters[{s.identity, occluded}]++);
    const fs::path image_path = dir / (std::string(name) + (s.image->channels() == 3 ? ".ppm" : ".pgm"));
    save_image(*s.image, image_path);
    if (s.mask) save_image(*s.mask, mask_path_for(image_path));
  }
}

std::set<int> identities_of(const std::vector<PersonSample>& samples) {
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.identity);
  return ids;
}

std::vector<PersonSample> filter_identities(const std::vector<PersonSample>& samples,
                                            const std::set<int>& identities) {
  std::vector<PersonSample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [&](const PersonSample& s) { return identities.contains(s.identity); });
  return out;
}

Split split_identities(const std::vector<PersonSample>& samples, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split fraction must be in (0, 1)");
  }
  const std::set<int> all = identities_of(samples);
  if (all.size() < 2) throw Error(ErrorCode::TooFewIdentities, "need at least 2 identities to split");

  std::vector<int> order(all.begin(), all.end());
  const auto m = static_cast<long long>(order.size());
  const long long n_train = std::clamp<long long>(
      static_cast<long long>(std::floor(static_cast<double>(m) * fraction + 0.5)), 1, m - 1);
  rng.shuffle(std::span<int>(order));

  Split split;
  split.train_identities.insert(order.begin(), order.begin() + n_train);
  split.test_identities.insert(order.begin() + n_train, order.end());
  return split;
}

ProbeGallery make_probe_gallery(const std::vector<PersonSample>& test, int shots, Rng& rng) {
  if (shots < 1) throw Error(ErrorCode::InvalidArgument, "shots must be >= 1");
  const bool has_real = std::any_of(test.begin(), test.end(), [](const PersonSample& s) {
    return s.occlusion == Occlusion::RealOcclusion;
  });
  const Occlusion probe_kind = has_real ? Occlusion::RealOcclusion : Occlusion::ArtificialOcclusion;

  std::map<int, std::vector<const PersonSample*>> full_body;
  ProbeGallery pg;
  pg.shots = shots;
  for (const auto& s : test) {
    if (s.occlusion == Occlusion::FullBody) {
      full_body[s.identity].push_back(&s);
    } else if (s.occlusion == probe_kind) {
      pg.probes.push_back(s);
    }
  }
  for (const auto& p : pg.probes) {
    if (!full_body.contains(p.identity)) {
      throw Error(ErrorCode::InsufficientShots,
                  "identity " + std::to_string(p.identity) + " has no full-body images");
    }
  }
  for (auto& [identity, candidates] : full_body) {
    if (static_cast<int>(candidates.size()) < shots) {
      throw Error(ErrorCode::InsufficientShots,
                  "identity " + std::to_string(identity) + " has " +
                      std::to_string(candidates.size()) + " full-body images, need " +
                      std::to_string(shots));
    }
    // Partial Fisher-Yates: the first `shots` slots form the draw.
    for (int i = 0; i < shots; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(i, static_cast<std::int64_t>(candidates.size()) - 1));
      std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
    }
    auto& slot = pg.gallery[identity];
    for (int i = 0; i < shots; ++i) slot.push_back(*candidates[static_cast<std::size_t>(i)]);
  }
  return pg;
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
  const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
  const double c = val * sat;
  const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
  const double m = val - c;
  Rgb out{};
  switch (static_cast<int>(h)) {
    case 0: out = {c, x, 0}; break;
    case 1: out = {x, c, 0}; break;
    case 2: out = {0, c, x}; break;
    case 3: out = {0, x, c}; break;
    case 4: out = {x, 0, c}; break;
    default: out = {c, 0, x}; break;
  }
  return {(out.r + m) * 255.0, (out.g + m) * 255.0, (out.b + m) * 255.0};
}

struct Appearance {
  Rgb torso;
  Rgb legs;
  Rgb skin;
  double body_width;  // fraction of image width
};

void fill_rect(Image& img, Image& mask, Rect r, const Rgb& color, double gain, Rng& rng) {
  const int x0 = std::max(0, r.x), y0 = std::max(0, r.y);
  const int x1 = std::min(img.width(), r.x + r.w), y1 = std::min(img.height(), r.y + r.h);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::array<double, 3> rgb{color.r, color.g, color.b};
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = quantize(rgb[c] * gain + rng.uniform_real(-8.0, 8.0));
      mask.at(x, y) = 255;
    }
  }
}

}  // namespace

std::vector<PersonSample> generate_synthetic_dataset(const SyntheticConfig& cfg, Rng& rng) {
  if (cfg.identities < 2 || cfg.per_identity < 2) {
    throw Error(ErrorCode::InvalidArgument, "synthetic dataset needs >= 2 identities and >= 2 images each");
  }
  if (cfg.width < 8 || cfg.height < 16) {
    throw Error(ErrorCode::InvalidArgument, "synthetic images must be at least 8x16");
  }
  // Hues are drawn independently per identity, so neighbouring identities can
  // land close together and an occluded garment removes half the evidence.
  std::vector<Appearance> looks(static_cast<std::size_t>(cfg.identities));
  for (int i = 0; i < cfg.identities; ++i) {
    const double torso_hue = rng.uniform_real(0.0, 360.0);
    const double legs_hue = rng.uniform_real(0.0, 360.0);
    auto& a = looks[static_cast<std::size_t>(i)];
    a.torso = hsv_to_rgb(torso_hue, rng.uniform_real(0.6, 0.9), rng.uniform_real(0.65, 0.95));
    a.legs = hsv_to_rgb(legs_hue, rng.uniform_real(0.5, 0.9), rng.uniform_real(0.4, 0.8));
    a.skin = hsv_to_rgb(rng.uniform_real(15.0, 35.0), rng.uniform_real(0.3, 0.6), rng.uniform_real(0.5, 0.9));
    a.body_width = rng.uniform_real(0.45, 0.6);
  }

  const int w = cfg.width;
  const int h = cfg.height;
  const int jitter_x = std::max(1, w / 16);
  const int jitter_y = std::max(1, h / 32);

  std::vector<PersonSample> out;
  out.reserve(static_cast<std::size_t>(cfg.identities) * cfg.per_identity);
  for (int i = 0; i < cfg.identities; ++i) {
    const auto& look = looks[static_cast<std::size_t>(i)];
    for (int j = 0; j < cfg.per_identity; ++j) {
      Image img(w, h, 3);
      Image mask(w, h, 1, 0);
      const Rgb bg = hsv_to_rgb(rng.uniform_real(0.0, 360.0), rng.uniform_real(0.0, 0.4),
                                rng.uniform_real(0.3, 0.8));
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          img.at(x, y, 0) = quantize(bg.r + rng.uniform_real(-40.0, 40.0));
          img.at(x, y, 1) = quantize(bg.g + rng.uniform_real(-40.0, 40.0));
          img.at(x, y, 2) = quantize(bg.b + rng.uniform_real(-40.0, 40.0));
        }
      }

      const int dx = static_cast<int>(rng.uniform_int(-jitter_x, jitter_x));
      const int dy = static_cast<int>(rng.uniform_int(-jitter_y, jitter_y));
      const double gain = rng.uniform_real(0.85, 1.15);
      const double width_scale = rng.uniform_real(0.9, 1.1);
      const int cx = w / 2 + dx;

      const int head_top = static_cast<int>(0.30 * h) + dy;
      const int torso_top = static_cast<int>(0.40 * h) + dy;
      const int legs_top = static_cast<int>(0.66 * h) + dy;
      const int feet = std::min(h, static_cast<int>(0.97 * h) + dy);
      const int body_w = std::max(3, static_cast<int>(look.body_width * width_scale * w));
      const int head_w = std::max(2, body_w / 2);
      const int leg_w = std::max(1, body_w * 2 / 5);
      const int gap = std::max(1, body_w - 2 * leg_w);

      fill_rect(img, mask, {cx - head_w / 2, head_top, head_w, torso_top - head_top}, look.skin, gain, rng);
      fill_rect(img, mask, {cx - body_w / 2, torso_top, body_w, legs_top - torso_top}, look.torso, gain, rng);
      const int left = cx - (2 * leg_w + gap) / 2;
      fill_rect(img, mask, {left, legs_top, leg_w, feet - legs_top}, look.legs, gain, rng);
      fill_rect(img, mask, {left + leg_w + gap, legs_top, leg_w, feet - legs_top}, look.legs, gain, rng);

      PersonSample s;
      char id[48];
      std::snprintf(id, sizeof(id), "synthetic/%03d/%04d", i + 1, j);
      s.id = id;
      s.identity = i + 1;
      s.occlusion = Occlusion::FullBody;
      s.image = std::make_shared<const Image>(std::move(img));
      s.mask = std::make_shared<const Image>(std::move(mask));
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace afpb
