#pragma once

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "afpb/model.hpp"

namespace afpb::oracle {

/// CMC by exhaustive enumeration: for every probe, count gallery identities
/// that beat the true identity (strictly smaller min-distance, or equal
/// distance with a smaller label). Distances via explicit sum of squares.
inline std::vector<double> brute_force_cmc(const std::vector<std::pair<std::vector<double>, int>>& probes,
                                           const std::map<int, std::vector<std::vector<double>>>& gallery) {
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (long double)(a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt((double)s);
  };
  std::vector<long long> hits(gallery.size(), 0);
  for (const auto& [feat, label] : probes) {
    std::map<int, double> score;
    for (const auto& [id, shots] : gallery) {
      double best = INFINITY;
      for (const auto& g : shots) best = std::min(best, dist(feat, g));
      score[id] = best;
    }
    std::size_t better = 0;
    for (const auto& [id, s] : score) {
      if (id == label) continue;
      if (s < score.at(label) || (s == score.at(label) && id < label)) ++better;
    }
    ++hits[better];
  }
  std::vector<double> cmc(gallery.size(), 0.0);
  long long acc = 0;
  for (std::size_t r = 0; r < hits.size(); ++r) {
    acc += hits[r];
    cmc[r] = (double)acc / (double)probes.size();
  }
  return cmc;
}

/// Direct (non-im2col) zero-padded convolution + ReLU on a CHW input.
inline std::vector<double> direct_conv_relu(const std::vector<double>& in, int channels, int side,
                                            const std::vector<double>& weight, const std::vector<double>& bias,
                                            int out_channels, int kernel, int stride, int& out_side) {
  const int pad = kernel / 2;
  out_side = (side + 2 * pad - kernel) / stride + 1;
  std::vector<double> out((std::size_t)out_channels * out_side * out_side, 0.0);
  for (int o = 0; o < out_channels; ++o)
    for (int y = 0; y < out_side; ++y)
      for (int x = 0; x < out_side; ++x) {
        double s = bias[o];
        for (int c = 0; c < channels; ++c)
          for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
              const int iy = y * stride + ky - pad, ix = x * stride + kx - pad;
              if (iy < 0 || ix < 0 || iy >= side || ix >= side) continue;
              s += weight[((o * channels + c) * kernel + ky) * kernel + kx] * in[(c * side + iy) * side + ix];
            }
        out[(o * out_side + y) * out_side + x] = std::max(0.0, s);
      }
  return out;
}

/// Relative error used by the gradient checks.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / scale;
}

/// Sign pattern of every conv pre-activation for a batch, used to detect
/// finite-difference probes that straddle a ReLU kink.
inline std::vector<bool> relu_pattern(const ModelParams& p, const std::vector<std::vector<double>>& batch) {
  std::vector<bool> pattern;
  for (const auto& input : batch) {
    std::vector<double> act = input;
    int channels = p.arch.input_channels, side = p.arch.input_size;
    for (std::size_t l = 0; l < p.convs.size(); ++l) {
      const auto& c = p.arch.convs[l];
      const int pad = c.kernel / 2;
      const int os = (side + 2 * pad - c.kernel) / c.stride + 1;
      std::vector<double> next((std::size_t)c.out_channels * os * os);
      for (int o = 0; o < c.out_channels; ++o)
        for (int y = 0; y < os; ++y)
          for (int x = 0; x < os; ++x) {
            double s = p.convs[l].bias[o];
            for (int ch = 0; ch < channels; ++ch)
              for (int ky = 0; ky < c.kernel; ++ky)
                for (int kx = 0; kx < c.kernel; ++kx) {
                  const int iy = y * c.stride + ky - pad, ix = x * c.stride + kx - pad;
                  if (iy < 0 || ix < 0 || iy >= side || ix >= side) continue;
                  s += p.convs[l].weight[((o * channels + ch) * c.kernel + ky) * c.kernel + kx] *
                       act[(ch * side + iy) * side + ix];
                }
            pattern.push_back(s > 0.0);
            next[(o * os + y) * os + x] = std::max(0.0, s);
          }
      act = std::move(next);
      channels = c.out_channels;
      side = os;
    }
  }
  return pattern;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Central differences of `loss` w.r.t. every parameter (step h). Coordinates
/// whose +-h probes change a ReLU sign are skipped: the loss is not
/// differentiable across the kink and the difference quotient is meaningless.
inline GradCheckResult check_gradients(ModelParams params, const Gradients& analytic,
                                       const std::vector<std::vector<double>>& batch,
                                       const std::function<double(const ModelParams&)>& loss, double h) {
  GradCheckResult r;
  const auto base_pattern = relu_pattern(params, batch);
  auto tensors = params.tensors();
  const auto grads = analytic.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t i = 0; i < tensors[t].size(); ++i) {
      const double orig = tensors[t][i];
      tensors[t][i] = orig + h;
      const double up = loss(params);
      const bool up_same = relu_pattern(params, batch) == base_pattern;
      tensors[t][i] = orig - h;
      const double down = loss(params);
      const bool down_same = relu_pattern(params, batch) == base_pattern;
      tensors[t][i] = orig;
      if (!up_same || !down_same) {
        ++r.skipped_kinks;
        continue;
      }
      const double numeric = (up - down) / (2 * h);
      r.max_rel_error = std::max(r.max_rel_error, relative_error(grads[t][i], numeric));
      ++r.checked;
    }
  }
  return r;
}

}  // namespace afpb::oracle
