#include "afpb/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "afpb/error.hpp"

namespace afpb {

std::vector<int> ArchSpec::output_sides() const {
  std::vector<int> sides;
  int side = input_size;
  for (const auto& c : convs) {
    const int pad = c.kernel / 2;
    side = (side + 2 * pad - c.kernel) / c.stride + 1;
    sides.push_back(side);
  }
  return sides;
}

void ArchSpec::validate() const {
  if (input_channels < 1 || input_size < 1) throw Error(ErrorCode::InvalidConfig, "bad input dims");
  if (convs.empty()) throw Error(ErrorCode::InvalidConfig, "architecture needs at least one conv layer");
  int side = input_size;
  for (const auto& c : convs) {
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
      throw Error(ErrorCode::InvalidConfig, "conv layer fields must be positive");
    }
    side = (side + 2 * (c.kernel / 2) - c.kernel) / c.stride + 1;
    if (side < 1) throw Error(ErrorCode::InvalidConfig, "architecture shrinks the input below 1 px");
  }
}

namespace {

std::size_t conv_weight_size(const ArchSpec& arch, std::size_t layer) {
  const int in = layer == 0 ? arch.input_channels : arch.convs[layer - 1].out_channels;
  const auto& c = arch.convs[layer];
  return static_cast<std::size_t>(c.out_channels) * in * c.kernel * c.kernel;
}

}  // namespace

ModelParams ModelParams::zeros(const ArchSpec& arch, int num_classes) {
  arch.validate();
  if (num_classes < 1) throw Error(ErrorCode::InvalidConfig, "need at least one identity class");
  ModelParams p;
  p.arch = arch;
  p.num_classes = num_classes;
  for (std::size_t l = 0; l < arch.convs.size(); ++l) {
    p.convs.push_back({std::vector<double>(conv_weight_size(arch, l), 0.0),
                       std::vector<double>(static_cast<std::size_t>(arch.convs[l].out_channels), 0.0)});
  }
  const auto d = static_cast<std::size_t>(arch.feature_dim());
  p.id_weight.assign(d * num_classes, 0.0);
  p.id_bias.assign(static_cast<std::size_t>(num_classes), 0.0);
  p.obc_weight.assign(d * 2, 0.0);
  p.obc_bias.assign(2, 0.0);
  return p;
}

ModelParams ModelParams::init(const ArchSpec& arch, int num_classes, Rng& rng) {
  ModelParams p = zeros(arch, num_classes);
  auto fill = [&rng](std::vector<double>& w, double fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : w) v = rng.uniform_real(-bound, bound);
  };
  for (std::size_t l = 0; l < arch.convs.size(); ++l) {
    const auto& c = arch.convs[l];
    fill(p.convs[l].weight, static_cast<double>(p.convs[l].weight.size()) / c.out_channels);
  }
  fill(p.id_weight, arch.feature_dim());
  fill(p.obc_weight, arch.feature_dim());
  return p;
}

std::vector<std::span<double>> ModelParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto& c : convs) {
    out.emplace_back(c.weight);
    out.emplace_back(c.bias);
  }
  out.emplace_back(id_weight);
  out.emplace_back(id_bias);
  out.emplace_back(obc_weight);
  out.emplace_back(obc_bias);
  return out;
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& c : convs) {
    out.emplace_back(c.weight);
    out.emplace_back(c.bias);
  }
  out.emplace_back(id_weight);
  out.emplace_back(id_bias);
  out.emplace_back(obc_weight);
  out.emplace_back(obc_bias);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

std::vector<double> normalize_planar(const Image& img) {
  const int hw = img.width() * img.height();
  std::vector<double> out(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out[static_cast<std::size_t>(c) * hw + y * img.width() + x] = img.at(x, y, c) / 255.0 - 0.5;
      }
    }
  }
  return out;
}

namespace {

struct ConvGeom {
  int in_channels;
  int in_side;
  int out_channels;
  int out_side;
  int kernel;
  int stride;
  int pad;

  std::size_t rows() const { return static_cast<std::size_t>(in_channels) * kernel * kernel; }
  std::size_t out_area() const { return static_cast<std::size_t>(out_side) * out_side; }
};

std::vector<ConvGeom> geometry(const ArchSpec& arch) {
  std::vector<ConvGeom> g;
  int channels = arch.input_channels;
  int side = arch.input_size;
  for (const auto& c : arch.convs) {
    const int pad = c.kernel / 2;
    const int out_side = (side + 2 * pad - c.kernel) / c.stride + 1;
    g.push_back({channels, side, c.out_channels, out_side, c.kernel, c.stride, pad});
    channels = c.out_channels;
    side = out_side;
  }
  return g;
}

void im2col(const ConvGeom& g, std::span<const double> in, std::vector<double>& cols) {
  const std::size_t area = g.out_area();
  cols.assign(g.rows() * area, 0.0);
  for (int c = 0; c < g.in_channels; ++c) {
    const double* plane = in.data() + static_cast<std::size_t>(c) * g.in_side * g.in_side;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        double* row = cols.data() + (static_cast<std::size_t>(c * g.kernel + ky) * g.kernel + kx) * area;
        for (int oy = 0; oy < g.out_side; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.in_side) continue;
          for (int ox = 0; ox < g.out_side; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= g.in_side) continue;
            row[oy * g.out_side + ox] = plane[iy * g.in_side + ix];
          }
        }
      }
    }
  }
}

void col2im(const ConvGeom& g, std::span<const double> cols, std::vector<double>& out) {
  const std::size_t area = g.out_area();
  out.assign(static_cast<std::size_t>(g.in_channels) * g.in_side * g.in_side, 0.0);
  for (int c = 0; c < g.in_channels; ++c) {
    double* plane = out.data() + static_cast<std::size_t>(c) * g.in_side * g.in_side;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const double* row = cols.data() + (static_cast<std::size_t>(c * g.kernel + ky) * g.kernel + kx) * area;
        for (int oy = 0; oy < g.out_side; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.in_side) continue;
          for (int ox = 0; ox < g.out_side; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= g.in_side) continue;
            plane[iy * g.in_side + ix] += row[oy * g.out_side + ox];
          }
        }
      }
    }
  }
}

double log_sum_exp(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  return m + std::log(s);
}

void check_batch(const ForwardTrace& trace, const ModelParams& params, std::span<const int> labels,
                 std::span<const int> flags) {
  if (static_cast<int>(labels.size()) != trace.batch || static_cast<int>(flags.size()) != trace.batch) {
    throw Error(ErrorCode::ShapeMismatch, "labels/flags do not match the batch size");
  }
  if (trace.id_logits.size() != static_cast<std::size_t>(trace.batch) * params.num_classes ||
      trace.features.size() != static_cast<std::size_t>(trace.batch) * params.arch.feature_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "trace was not produced by these params");
  }
}

}  // namespace

ForwardTrace forward(const ModelParams& params, std::span<const std::vector<double>> batch) {
  const auto geom = geometry(params.arch);
  const std::size_t input_len = static_cast<std::size_t>(params.arch.input_channels) *
                                params.arch.input_size * params.arch.input_size;
  const int d = params.arch.feature_dim();
  const int k = params.num_classes;

  ForwardTrace t;
  t.batch = static_cast<int>(batch.size());
  t.sides = params.arch.output_sides();
  t.columns.resize(batch.size());
  t.activations.resize(batch.size());
  t.features.assign(batch.size() * d, 0.0);
  t.id_logits.assign(batch.size() * k, 0.0);
  t.obc_logits.assign(batch.size() * 2, 0.0);

  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].size() != input_len) {
      throw Error(ErrorCode::ShapeMismatch, "input length " + std::to_string(batch[b].size()) +
                                                " does not match architecture (" +
                                                std::to_string(input_len) + ")");
    }
    auto& cols = t.columns[b];
    auto& acts = t.activations[b];
    cols.resize(geom.size());
    acts.resize(geom.size());
    std::span<const double> input = batch[b];
    for (std::size_t l = 0; l < geom.size(); ++l) {
      const auto& g = geom[l];
      const auto& layer = params.convs[l];
      im2col(g, input, cols[l]);
      const std::size_t area = g.out_area();
      const std::size_t rows = g.rows();
      auto& out = acts[l];
      out.assign(static_cast<std::size_t>(g.out_channels) * area, 0.0);
      for (int oc = 0; oc < g.out_channels; ++oc) {
        double* dst = out.data() + oc * area;
        std::fill(dst, dst + area, layer.bias[static_cast<std::size_t>(oc)]);
        const double* w = layer.weight.data() + oc * rows;
        for (std::size_t r = 0; r < rows; ++r) {
          const double wr = w[r];
          const double* src = cols[l].data() + r * area;
          for (std::size_t j = 0; j < area; ++j) dst[j] += wr * src[j];
        }
        for (std::size_t j = 0; j < area; ++j) dst[j] = std::max(dst[j], 0.0);
      }
      input = out;
    }

    const auto& last = acts.back();
    const std::size_t area = geom.back().out_area();
    double* h = t.features.data() + b * d;
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < area; ++j) s += last[c * area + j];
      h[c] = s / static_cast<double>(area);
    }
    double* id = t.id_logits.data() + b * k;
    std::copy(params.id_bias.begin(), params.id_bias.end(), id);
    double* obc = t.obc_logits.data() + b * 2;
    obc[0] = params.obc_bias[0];
    obc[1] = params.obc_bias[1];
    for (int c = 0; c < d; ++c) {
      const double* wrow = params.id_weight.data() + static_cast<std::size_t>(c) * k;
      for (int j = 0; j < k; ++j) id[j] += h[c] * wrow[j];
      obc[0] += h[c] * params.obc_weight[c * 2 + 0];
      obc[1] += h[c] * params.obc_weight[c * 2 + 1];
    }
  }
  return t;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  std::transform(logits.begin(), logits.end(), p.begin(), [lse](double v) { return std::exp(v - lse); });
  return p;
}

double id_loss(std::span<const double> logits, int label) {
  if (label < 1 || label > static_cast<int>(logits.size())) {
    throw Error(ErrorCode::LabelOutOfRange,
                "label " + std::to_string(label) + " not in 1.." + std::to_string(logits.size()));
  }
  return log_sum_exp(logits) - logits[static_cast<std::size_t>(label - 1)];
}

double obc_loss(std::span<const double> logits, int flag) {
  if (logits.size() != 2) throw Error(ErrorCode::ShapeMismatch, "OBC head has two logits");
  if (flag != 0 && flag != 1) throw Error(ErrorCode::InvalidArgument, "OBC flag must be 0 or 1");
  return log_sum_exp(logits) - logits[static_cast<std::size_t>(flag)];
}

double multi_task_loss(double id, double obc, double alpha) { return alpha * id + (1.0 - alpha) * obc; }

BatchLoss batch_loss(const ForwardTrace& trace, const ModelParams& params, std::span<const int> labels,
                     std::span<const int> flags, double alpha) {
  check_batch(trace, params, labels, flags);
  const auto k = static_cast<std::size_t>(params.num_classes);
  BatchLoss out;
  for (int b = 0; b < trace.batch; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    out.id += id_loss(std::span(trace.id_logits).subspan(bi * k, k), labels[bi]);
    out.obc += obc_loss(std::span(trace.obc_logits).subspan(bi * 2, 2), flags[bi]);
  }
  out.id /= trace.batch;
  out.obc /= trace.batch;
  out.total = multi_task_loss(out.id, out.obc, alpha);
  return out;
}

Gradients backward(const ForwardTrace& trace, const ModelParams& params, std::span<const int> labels,
                   std::span<const int> flags, double alpha) {
  check_batch(trace, params, labels, flags);
  const auto geom = geometry(params.arch);
  const int d = params.arch.feature_dim();
  const int k = params.num_classes;
  const double inv_batch = 1.0 / trace.batch;

  Gradients g = ModelParams::zeros(params.arch, k);
  std::vector<double> d_id(static_cast<std::size_t>(k));
  std::vector<double> d_h(static_cast<std::size_t>(d));
  std::vector<double> d_act, d_cols, d_prev;

  for (int b = 0; b < trace.batch; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const int label = labels[bi];
    if (label < 1 || label > k) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));

    // Head gradients from softmax - onehot, scaled by the loss weights.
    auto p_id = softmax(std::span(trace.id_logits).subspan(bi * k, static_cast<std::size_t>(k)));
    for (int j = 0; j < k; ++j) {
      d_id[j] = alpha * inv_batch * (p_id[j] - (j == label - 1 ? 1.0 : 0.0));
    }
    auto p_obc = softmax(std::span(trace.obc_logits).subspan(bi * 2, 2));
    const double d_obc[2] = {(1.0 - alpha) * inv_batch * (p_obc[0] - (flags[bi] == 0 ? 1.0 : 0.0)),
                             (1.0 - alpha) * inv_batch * (p_obc[1] - (flags[bi] == 1 ? 1.0 : 0.0))};

    const auto h = trace.feature(b, d);
    for (int c = 0; c < d; ++c) {
      double acc = 0.0;
      const double* wrow = params.id_weight.data() + static_cast<std::size_t>(c) * k;
      double* gw = g.id_weight.data() + static_cast<std::size_t>(c) * k;
      for (int j = 0; j < k; ++j) {
        gw[j] += h[c] * d_id[j];
        acc += wrow[j] * d_id[j];
      }
      g.obc_weight[c * 2 + 0] += h[c] * d_obc[0];
      g.obc_weight[c * 2 + 1] += h[c] * d_obc[1];
      acc += params.obc_weight[c * 2 + 0] * d_obc[0] + params.obc_weight[c * 2 + 1] * d_obc[1];
      d_h[c] = acc;
    }
    for (int j = 0; j < k; ++j) g.id_bias[j] += d_id[j];
    g.obc_bias[0] += d_obc[0];
    g.obc_bias[1] += d_obc[1];

    // Global average pooling spreads d_h evenly over the last maps.
    {
      const std::size_t area = geom.back().out_area();
      d_act.assign(static_cast<std::size_t>(d) * area, 0.0);
      for (int c = 0; c < d; ++c) {
        const double v = d_h[c] / static_cast<double>(area);
        std::fill(d_act.begin() + c * area, d_act.begin() + (c + 1) * area, v);
      }
    }

    for (std::size_t li = geom.size(); li-- > 0;) {
      const auto& gm = geom[li];
      const auto& act = trace.activations[bi][li];
      const auto& cols = trace.columns[bi][li];
      const std::size_t area = gm.out_area();
      const std::size_t rows = gm.rows();
      for (std::size_t j = 0; j < d_act.size(); ++j) {
        if (act[j] <= 0.0) d_act[j] = 0.0;
      }
      auto& gl = g.convs[li];
      const auto& wl = params.convs[li].weight;
      if (li > 0) d_cols.assign(rows * area, 0.0);
      for (int oc = 0; oc < gm.out_channels; ++oc) {
        const double* dz = d_act.data() + oc * area;
        double bias_acc = 0.0;
        for (std::size_t j = 0; j < area; ++j) bias_acc += dz[j];
        gl.bias[static_cast<std::size_t>(oc)] += bias_acc;
        double* gw = gl.weight.data() + oc * rows;
        const double* w = wl.data() + oc * rows;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* src = cols.data() + r * area;
          double acc = 0.0;
          for (std::size_t j = 0; j < area; ++j) acc += dz[j] * src[j];
          gw[r] += acc;
          if (li > 0) {
            double* dc = d_cols.data() + r * area;
            const double wr = w[r];
            for (std::size_t j = 0; j < area; ++j) dc[j] += wr * dz[j];
          }
        }
      }
      if (li > 0) {
        col2im(gm, d_cols, d_prev);
        std::swap(d_act, d_prev);
      }
    }
  }
  return g;
}

void sgd_step(ModelParams& params, const Gradients& grads, double lr) {
  auto dst = params.tensors();
  const auto src = grads.tensors();
  if (dst.size() != src.size()) throw Error(ErrorCode::ShapeMismatch, "gradient layout differs from params");
  for (std::size_t t = 0; t < dst.size(); ++t) {
    if (dst[t].size() != src[t].size()) throw Error(ErrorCode::ShapeMismatch, "gradient tensor size differs");
    for (double v : src[t]) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteGradient, "gradient contains NaN or Inf");
    }
  }
  for (std::size_t t = 0; t < dst.size(); ++t) {
    for (std::size_t i = 0; i < dst[t].size(); ++i) dst[t][i] -= lr * src[t][i];
  }
}

int TrainConfig::jitter() const {
  return max_jitter >= 0 ? max_jitter : static_cast<int>(std::lround(8.0 * arch.input_size / 224.0));
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be in [0, 1]");
  if (alpha == 0.0 || alpha == 1.0) {
    warn("alpha = " + std::to_string(alpha) +
         " is outside the open interval (0, 1); alpha >= 0.5 is recommended");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must be finite and >= 0");
  }
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  if (iterations < 0) throw Error(ErrorCode::InvalidConfig, "iterations must be >= 0");
  if (lr_decay_every < 0) throw Error(ErrorCode::InvalidConfig, "lr_decay_every must be >= 0");
  arch.validate();
}

Image prepare_input(const Image& img, const ArchSpec& arch) {
  return resize(img, arch.input_size, arch.input_size);
}

TrainResult train(const std::vector<PersonSample>& samples, const TrainConfig& cfg,
                  const EpochResampler& resample) {
  cfg.validate();
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");

  std::vector<int> labels_seen;
  for (const auto& s : samples) labels_seen.push_back(s.identity);
  std::sort(labels_seen.begin(), labels_seen.end());
  labels_seen.erase(std::unique(labels_seen.begin(), labels_seen.end()), labels_seen.end());
  const int k = static_cast<int>(labels_seen.size());
  if (labels_seen.front() != 1 || labels_seen.back() != k) {
    throw Error(ErrorCode::LabelOutOfRange, "training labels must be contiguous 1..K");
  }

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng order_rng(derive_seed(cfg.seed, 2));
  Rng augment_rng(derive_seed(cfg.seed, 3));

  TrainResult result;
  result.params = ModelParams::init(cfg.arch, k, init_rng);
  result.history.reserve(static_cast<std::size_t>(cfg.iterations));

  const int side = cfg.arch.input_size;
  const int jitter = cfg.jitter();
  const int padded = side + 2 * jitter;

  std::vector<Image> images;
  std::vector<int> labels, flags;
  auto prepare = [&](const std::vector<PersonSample>& set) {
    images.clear();
    labels.clear();
    flags.clear();
    for (const auto& s : set) {
      if (s.identity < 1 || s.identity > k) {
        throw Error(ErrorCode::LabelOutOfRange, "sample " + s.id + " has label outside 1..K");
      }
      if (s.image->channels() != cfg.arch.input_channels) {
        throw Error(ErrorCode::ShapeMismatch, "sample " + s.id + " has wrong channel count");
      }
      images.push_back(resize(*s.image, padded, padded));
      labels.push_back(s.identity);
      flags.push_back(obc_target(s.occlusion));
    }
  };
  prepare(samples);

  std::vector<std::size_t> order(images.size());
  std::size_t cursor = order.size();
  int epoch = -1;

  std::vector<std::vector<double>> inputs(static_cast<std::size_t>(cfg.batch_size));
  std::vector<int> batch_labels(static_cast<std::size_t>(cfg.batch_size));
  std::vector<int> batch_flags(static_cast<std::size_t>(cfg.batch_size));
  double lr = cfg.learning_rate;

  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      if (cursor == order.size()) {
        ++epoch;
        if (epoch > 0 && resample) {
          if (auto fresh = resample(epoch); !fresh.empty()) {
            prepare(fresh);
            order.resize(images.size());
          }
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        order_rng.shuffle(std::span(order));
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      inputs[b] = normalize_planar(jittered_center_crop(images[idx], side, jitter, augment_rng));
      batch_labels[b] = labels[idx];
      batch_flags[b] = flags[idx];
    }

    const ForwardTrace trace = forward(result.params, inputs);
    const BatchLoss loss = batch_loss(trace, result.params, batch_labels, batch_flags, cfg.alpha);
    const Gradients grads = backward(trace, result.params, batch_labels, batch_flags, cfg.alpha);
    if (cfg.lr_decay_every > 0 && it > 0 && it % cfg.lr_decay_every == 0) lr *= cfg.lr_decay_factor;
    try {
      sgd_step(result.params, grads, lr);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteGradient) throw;
      throw Error(ErrorCode::NonFiniteGradient, "at iteration " + std::to_string(it));
    }
    result.history.push_back({loss.total, loss.id, loss.obc});
  }
  return result;
}

std::vector<double> extract_feature(const ModelParams& params, const Image& img) {
  if (img.width() != params.arch.input_size || img.height() != params.arch.input_size ||
      img.channels() != params.arch.input_channels) {
    throw Error(ErrorCode::ShapeMismatch, "image dims do not match the network input");
  }
  const std::vector<std::vector<double>> batch{normalize_planar(img)};
  const ForwardTrace t = forward(params, batch);
  return t.features;
}

namespace {

constexpr char kMagic[8] = {'A', 'F', 'P', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorCode::CorruptData, "truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot open for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.arch.input_channels));
  put_u32(out, static_cast<std::uint32_t>(params.arch.input_size));
  put_u32(out, static_cast<std::uint32_t>(params.arch.convs.size()));
  for (const auto& c : params.arch.convs) {
    put_u32(out, static_cast<std::uint32_t>(c.out_channels));
    put_u32(out, static_cast<std::uint32_t>(c.kernel));
    put_u32(out, static_cast<std::uint32_t>(c.stride));
  }
  put_u32(out, static_cast<std::uint32_t>(params.num_classes));
  for (const auto& t : params.tensors()) {
    for (double v : t) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error(ErrorCode::CorruptData, "write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not an AFPB checkpoint");
  }
  if (get_u32(in) != kVersion) throw Error(ErrorCode::UnsupportedFormat, "unknown checkpoint version");
  ArchSpec arch;
  arch.input_channels = static_cast<int>(get_u32(in));
  arch.input_size = static_cast<int>(get_u32(in));
  const std::uint32_t layers = get_u32(in);
  if (layers > 64) throw Error(ErrorCode::CorruptData, "implausible layer count");
  arch.convs.clear();
  for (std::uint32_t l = 0; l < layers; ++l) {
    ConvSpec c;
    c.out_channels = static_cast<int>(get_u32(in));
    c.kernel = static_cast<int>(get_u32(in));
    c.stride = static_cast<int>(get_u32(in));
    arch.convs.push_back(c);
  }
  const int k = static_cast<int>(get_u32(in));
  ModelParams p;
  try {
    p = ModelParams::zeros(arch, k);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptData, std::string("bad architecture block: ") + e.detail());
  }
  for (auto t : p.tensors()) {
    for (double& v : t) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::CorruptData, "trailing bytes after checkpoint tensors");
  }
  return p;
}

ModelParams round_to_f32(const ModelParams& params) {
  ModelParams out = params;
  for (auto t : out.tensors()) {
    for (double& v : t) v = static_cast<double>(static_cast<float>(v));
  }
  return out;
}

}  // namespace afpb
