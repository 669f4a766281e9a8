#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "afpb/image.hpp"
#include "afpb/rng.hpp"
#include "afpb/sample.hpp"

namespace afpb {

struct ConvSpec {
  int out_channels = 8;
  int kernel = 3;
  int stride = 2;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

/// Trunk layout: conv -> ReLU repeated, zero padding kernel/2, then global
/// average pooling to a feature of length D = last out_channels.
struct ArchSpec {
  int input_channels = 3;
  int input_size = 32;  // square network input side
  std::vector<ConvSpec> convs{{8, 3, 2}, {16, 3, 2}, {32, 3, 2}};

  int feature_dim() const { return convs.empty() ? input_channels : convs.back().out_channels; }
  /// Spatial side after each conv layer.
  std::vector<int> output_sides() const;
  void validate() const;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

struct ConvLayer {
  std::vector<double> weight;  // out x in x k x k
  std::vector<double> bias;    // out

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct ModelParams {
  ArchSpec arch;
  int num_classes = 0;  // K, the number of training identities
  std::vector<ConvLayer> convs;
  std::vector<double> id_weight;   // D x K
  std::vector<double> id_bias;     // K
  std::vector<double> obc_weight;  // D x 2
  std::vector<double> obc_bias;    // 2

  /// All zeros, shaped for arch and K.
  static ModelParams zeros(const ArchSpec& arch, int num_classes);
  /// Uniform in +-sqrt(6 / fan_in) for every weight, zero biases.
  static ModelParams init(const ArchSpec& arch, int num_classes, Rng& rng);

  /// Every tensor in declaration order: conv weight/bias pairs, identity
  /// head, OBC head. This order is also the checkpoint order.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Gradients = ModelParams;

/// Per-sample network input: planar CHW, values v / 255 - 0.5.
std::vector<double> normalize_planar(const Image& img);

struct ForwardTrace {
  int batch = 0;
  std::vector<int> sides;  // spatial side per conv layer
  /// [sample][layer] im2col matrices of each conv input (rows c*k*k+ky*k+kx).
  std::vector<std::vector<std::vector<double>>> columns;
  /// [sample][layer] post-ReLU activations, CHW. The last entry holds the
  /// last-conv feature maps.
  std::vector<std::vector<std::vector<double>>> activations;
  std::vector<double> features;    // B x D
  std::vector<double> id_logits;   // B x K
  std::vector<double> obc_logits;  // B x 2

  std::span<const double> feature(int b, int dim) const {
    return {features.data() + static_cast<std::size_t>(b) * dim, static_cast<std::size_t>(dim)};
  }
};

/// Each input is a normalize_planar tensor of the arch's input dims.
ForwardTrace forward(const ModelParams& params, std::span<const std::vector<double>> batch);

/// -log softmax(logits)[label], label in 1..K.
double id_loss(std::span<const double> logits, int label);
/// Two-class cross entropy; flag 0 = occluded, 1 = full body.
double obc_loss(std::span<const double> logits, int flag);
double multi_task_loss(double id, double obc, double alpha);
std::vector<double> softmax(std::span<const double> logits);

struct BatchLoss {
  double total = 0.0;
  double id = 0.0;
  double obc = 0.0;
};

/// Batch-mean losses for a trace.
BatchLoss batch_loss(const ForwardTrace& trace, const ModelParams& params, std::span<const int> labels,
                     std::span<const int> flags, double alpha);

/// Exact gradient of the batch mean of alpha * L_id + (1 - alpha) * L_obc.
Gradients backward(const ForwardTrace& trace, const ModelParams& params, std::span<const int> labels,
                   std::span<const int> flags, double alpha);

/// p <- p - lr * g. Throws NonFiniteGradient before touching params.
void sgd_step(ModelParams& params, const Gradients& grads, double lr);

struct TrainConfig {
  double alpha = 0.8;
  double learning_rate = 1e-3;
  int batch_size = 20;
  int iterations = 50000;
  std::uint64_t seed = 0;
  ArchSpec arch;
  /// Crop jitter; the training image is resized to input_size + 2 * jitter.
  /// Negative selects round(8 * input_size / 224).
  int max_jitter = -1;
  /// Step decay: multiply lr by lr_decay_factor every lr_decay_every
  /// iterations. 0 disables.
  int lr_decay_every = 0;
  double lr_decay_factor = 0.1;

  int jitter() const;
  /// Throws InvalidConfig; warns when alpha is on the boundary of [0, 1].
  void validate() const;
};

struct LossRecord {
  double total = 0.0;
  double id = 0.0;
  double obc = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> history;
};

/// Called at the start of every epoch after the first with the epoch index;
/// a non-empty return replaces the training set.
using EpochResampler = std::function<std::vector<PersonSample>(int epoch)>;

/// SGD over the combined set: per epoch the sample order is shuffled, batches
/// are consecutive slices, each image gets a jittered center crop. Labels must
/// be contiguous 1..K.
TrainResult train(const std::vector<PersonSample>& samples, const TrainConfig& cfg,
                  const EpochResampler& resample = {});

/// Trunk feature h(x) of an image already at the input dims.
std::vector<double> extract_feature(const ModelParams& params, const Image& img);

/// Resizes an arbitrary image to the network input dims.
Image prepare_input(const Image& img, const ArchSpec& arch);

/// Little-endian: "AFPBCKPT", u32 version, u32 input channels, u32 input
/// side, u32 layer count, per layer u32 out/kernel/stride, u32 K, then every
/// tensor as f32 in declaration order.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Params rounded through f32, i.e. what a checkpoint round trip yields.
ModelParams round_to_f32(const ModelParams& params);

}  // namespace afpb
