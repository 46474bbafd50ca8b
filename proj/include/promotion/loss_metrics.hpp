/* Copyright 2026 The Promotion Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROMOTION_LOSS_METRICS_HPP_
#define PROMOTION_LOSS_METRICS_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/flow.hpp"
#include "promotion/image.hpp"
#include "promotion/media_io.hpp"
#include "promotion/nn/init.hpp"
#include "promotion/nn/ops.hpp"
#include "promotion/numeric.hpp"

namespace promotion {

using nn::Tensor;

struct LossWeights {
  double lambda = 0.1;
  double epsilon = 1e-6;
};

// Flow-weighted Charbonnier: mean over C*H*W of
// sqrt(((pred - target) * (1 + w_att))^2 + eps), w_att shared across channels.
inline Tensor charbonnier_flow(const Tensor& pred, const Tensor& target, const AttentionMap& w_att,
                               const LossWeights& w = {}) {
  if (pred.shape() != target.shape())
    throw ShapeError("charbonnier_flow: pred " + nn::to_string(pred.shape()) + " vs target " +
                     nn::to_string(target.shape()));
  if (pred.rank() != 3 || pred.dim(1) != static_cast<std::size_t>(w_att.values.rows()) ||
      pred.dim(2) != static_cast<std::size_t>(w_att.values.cols()))
    throw ShapeError("charbonnier_flow: attention map does not match " +
                     nn::to_string(pred.shape()));
  const std::size_t P = w_att.values.size();
  std::vector<double> weight(pred.size());
  for (std::size_t c = 0; c < pred.dim(0); ++c)
    for (std::size_t p = 0; p < P; ++p) weight[c * P + p] = 1.0 + w_att.values.values()[p];
  Tensor weighted = nn::mul(nn::sub(pred, target), Tensor(pred.shape(), std::move(weight)));
  return nn::mean(nn::sqrt(nn::add_scalar(nn::square(weighted), w.epsilon)));
}

// Fixed-weight feature-distance network: four 3x3 stride-2 conv stages
// (8/16/32/64 channels, relu) drawn once from a seed and never trained.
// Stage features are unit-normalized across channels per position.
class PerceptualExtractor {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x70726f6dULL;
  static constexpr std::array<std::size_t, 4> kStageChannels{8, 16, 32, 64};

  explicit PerceptualExtractor(std::uint64_t seed = kDefaultSeed) {
    std::mt19937_64 rng(seed);
    std::size_t in = 3;
    for (std::size_t out : kStageChannels) {
      auto spec = nn::ConvSpec::conv2d(in, out, 3, 2, 1);
      const double bound = std::sqrt(6.0 / static_cast<double>(in * 9));
      stages_.push_back({spec, nn::random_uniform(spec.weight_shape_2d(), -bound, bound, rng)});
      in = out;
    }
  }

  std::vector<Tensor> features(const Tensor& image) const {
    std::vector<Tensor> out;
    Tensor x = image;
    for (const auto& s : stages_) {
      x = nn::relu(nn::conv2d(x, s.weight, Tensor(), s.spec));
      out.push_back(nn::channel_unit_normalize(x));
    }
    return out;
  }

  std::size_t stages() const { return stages_.size(); }

 private:
  struct Stage {
    nn::ConvSpec spec;
    Tensor weight;
  };
  std::vector<Stage> stages_;
};

// Mean over stages of the mean squared distance between normalized features.
inline Tensor perceptual_distance(const Tensor& pred, const Tensor& target,
                                  const PerceptualExtractor& ext) {
  if (pred.shape() != target.shape())
    throw ShapeError("perceptual_distance: shape mismatch " + nn::to_string(pred.shape()) +
                     " vs " + nn::to_string(target.shape()));
  auto fa = ext.features(pred);
  auto fb = ext.features(target);
  std::vector<Tensor> per_stage;
  for (std::size_t s = 0; s < fa.size(); ++s)
    per_stage.push_back(nn::reshape(nn::mean(nn::square(nn::sub(fa[s], fb[s]))), {1}));
  return nn::mean(nn::stack(per_stage));
}

struct LossTerms {
  Tensor total;
  double charbonnier = 0.0;
  double perceptual = 0.0;
};

// L = L_cb + lambda * L_ps
inline LossTerms total_loss(const Tensor& pred, const Tensor& target, const AttentionMap& w_att,
                            const LossWeights& w, const PerceptualExtractor& ext) {
  Tensor cb = charbonnier_flow(pred, target, w_att, w);
  if (w.lambda == 0.0) return {cb, cb.item(), 0.0};
  Tensor ps = perceptual_distance(pred, target, ext);
  return {nn::add(cb, nn::scale(ps, w.lambda)), cb.item(), ps.item()};
}

// Planar 8-bit RGB frame.
struct Frame8 {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> values;  // 3 planes

  std::size_t plane_size() const { return static_cast<std::size_t>(rows) * cols; }
  std::uint8_t operator()(int ch, int r, int c) const {
    return values[ch * plane_size() + static_cast<std::size_t>(r) * cols + c];
  }
};

inline Frame8 to_frame8(const RgbImage& img) {
  Frame8 f{img.rows(), img.cols(), std::vector<std::uint8_t>(img.values().size())};
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = quantize8(img.values()[i]);
  return f;
}

inline constexpr double kPsnrCap = 100.0;

// 10 log10(255^2 / MSE) over all three channels; 100 dB when identical.
inline double psnr(const Frame8& a, const Frame8& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("psnr: shape mismatch");
  std::vector<double> sq(a.values.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    sq[i] = d * d;
  }
  const double mse = compensated_sum(sq) / static_cast<double>(sq.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double v = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2.0 * sigma * sigma));
      w[i * size + j] = v;
      total += v;
    }
  for (double& v : w) v /= total;
  return w;
}

inline std::vector<double> luma255(const Frame8& f) {
  std::vector<double> y(f.plane_size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = luma(f.values[i], f.values[f.plane_size() + i], f.values[2 * f.plane_size() + i]);
  return y;
}

}  // namespace detail

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5) of
// the luma channel, K1 = 0.01, K2 = 0.03, L = 255.
inline double ssim(const Frame8& a, const Frame8& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("ssim: shape mismatch");
  if (a.rows < kSsimWindow || a.cols < kSsimWindow)
    throw ShapeError("ssim: frames must be at least 11x11");
  static const std::vector<double> win = detail::gaussian_window(kSsimWindow, kSsimSigma);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const auto x = detail::luma255(a);
  const auto y = detail::luma255(b);
  const int cols = a.cols;
  std::vector<double> local;
  for (int r = 0; r + kSsimWindow <= a.rows; ++r) {
    for (int c = 0; c + kSsimWindow <= a.cols; ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < kSsimWindow; ++i)
        for (int j = 0; j < kSsimWindow; ++j) {
          const double w = win[i * kSsimWindow + j];
          const std::size_t k = static_cast<std::size_t>(r + i) * cols + (c + j);
          mx += w * x[k];
          my += w * y[k];
          sxx += w * (x[k] * x[k]);
          syy += w * (y[k] * y[k]);
          sxy += w * (x[k] * y[k]);
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      local.push_back(((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                      ((mx * mx + my * my + c1) * (vx + vy + c2)));
    }
  }
  return compensated_sum(local) / static_cast<double>(local.size());
}

inline double psnr(const RgbImage& a, const RgbImage& b) { return psnr(to_frame8(a), to_frame8(b)); }
inline double ssim(const RgbImage& a, const RgbImage& b) { return ssim(to_frame8(a), to_frame8(b)); }

}  // namespace promotion

#endif  // PROMOTION_LOSS_METRICS_HPP_
