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

#ifndef PROMOTION_TRAIN_HPP_
#define PROMOTION_TRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/flow.hpp"
#include "promotion/loss_metrics.hpp"
#include "promotion/media_io.hpp"
#include "promotion/model.hpp"
#include "promotion/nn/init.hpp"
#include "promotion/priors.hpp"
#include "promotion/synthesis.hpp"

namespace promotion {

// Everything the network and loss consume for one 5-frame clip.
struct PreparedClip {
  FrameSequence clip;
  FlowField flow;
  AttentionMap attention;
  BlurReasoningVector blur;
  PriorStack priors;
  Tensor clip_tensor;
  Tensor prior_tensor;
};

inline PreparedClip prepare_clip(const FrameSequence& clip,
                                 const std::optional<FlowField>& external_flow = std::nullopt,
                                 int flow_block = 16, int flow_radius = 8) {
  if (clip.size() != kPriorDepth || clip.center_index != kPriorDepth / 2)
    throw ShapeError("prepare_clip: expected 5 frames centered at index 2");
  PreparedClip p;
  p.clip = clip;
  p.flow = external_flow ? *external_flow : center_flow_estimate(clip, flow_block, flow_radius);
  p.attention = attention_map(p.flow);
  p.blur = blur_reasoning_vector(clip);
  p.priors = compute_priors(clip, p.flow);
  p.clip_tensor = clip_tensor(clip);
  p.prior_tensor = prior_tensor(p.priors);
  return p;
}

// Synthetic training material: a textured scene under camera pan with an
// independently moving foreground square.
struct ToyScene {
  FrameSequence sharp;    // 7 frames
  FrameSequence blurred;  // 7 frames, same timestamps
  FrameSequence clip() const {
    FrameSequence c;
    c.frames.assign(blurred.frames.begin() + 1, blurred.frames.begin() + 6);
    c.center_index = 2;
    return c;
  }
  const RgbImage& target() const { return sharp.frames[3]; }
};

namespace detail {

struct Wave {
  double fx, fy, phase;
  std::array<double, 3> amp;
};

inline double scene_value(const std::vector<Wave>& waves, int ch, double x, double y) {
  double v = 0.5;
  for (const auto& w : waves)
    v += w.amp[ch] * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
  return v;
}

}  // namespace detail

inline ToyScene make_toy_scene(int size, std::uint64_t seed, double pan_speed = 3.0,
                               double object_speed = 2.0, int frames = 7) {
  if (size < 16 || size % 4 != 0) throw DataError("toy scene size must be a multiple of 4, >= 16");
  std::mt19937_64 rng(seed);
  auto waves_for = [&rng](int count) {
    std::vector<detail::Wave> w;
    for (int i = 0; i < count; ++i)
      w.push_back({nn::uniform(rng, -0.15, 0.15), nn::uniform(rng, -0.15, 0.15),
                   nn::uniform(rng, 0.0, 2.0 * std::numbers::pi),
                   {nn::uniform(rng, 0.02, 0.12), nn::uniform(rng, 0.02, 0.12),
                    nn::uniform(rng, 0.02, 0.12)}});
    return w;
  };
  const auto background = waves_for(6);
  const auto object = waves_for(4);
  struct Box { double x0, y0, w, h; std::array<double, 3> color; };
  std::vector<Box> boxes;
  for (int i = 0; i < 5; ++i)
    boxes.push_back({nn::uniform(rng, 0, size), nn::uniform(rng, 0, size),
                     nn::uniform(rng, 4, size / 3.0), nn::uniform(rng, 4, size / 3.0),
                     {nn::uniform(rng, 0, 1), nn::uniform(rng, 0, 1), nn::uniform(rng, 0, 1)}});
  const double side = size / 3.0;
  const double oy = nn::uniform(rng, 0, size - side);

  ToyScene scene;
  for (int t = 0; t < frames; ++t) {
    RgbImage img(size, size);
    const double pan = pan_speed * t;
    const double ox = size / 4.0 + object_speed * (t - frames / 2);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        const double x = c + pan, y = r;
        for (int ch = 0; ch < 3; ++ch) {
          double v = detail::scene_value(background, ch, x, y);
          for (const auto& b : boxes)
            if (x >= b.x0 && x < b.x0 + b.w && y >= b.y0 && y < b.y0 + b.h) v = b.color[ch];
          if (c >= ox && c < ox + side && r >= oy && r < oy + side)
            v = detail::scene_value(object, ch, c - ox, r - oy) + (ch == 0 ? 0.2 : -0.1);
          img(ch, r, c) = std::clamp(v, 0.0, 1.0);
        }
      }
    scene.sharp.frames.push_back(quantized(img));
  }
  scene.sharp.center_index = frames / 2;
  scene.blurred = synthesize_blur(scene.sharp, {8, 8}, {});
  for (auto& f : scene.blurred.frames) f = quantized(f);
  return scene;
}

struct StepRecord {
  int step = 0;
  double total = 0.0;
  double charbonnier = 0.0;
  double perceptual = 0.0;
};

enum class Optimizer { kAdam, kGradientDescent };

inline Optimizer parse_optimizer(const std::string& name) {
  if (name == "adam") return Optimizer::kAdam;
  if (name == "gd") return Optimizer::kGradientDescent;
  throw DataError("unknown optimizer '" + name + "' (expected adam or gd)");
}

struct TrainOptions {
  int steps = 500;
  double step_size = 1e-3;
  Optimizer optimizer = Optimizer::kAdam;
  LossWeights weights;
};

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8), or plain
// fixed-step gradient descent.
class ParameterUpdater {
 public:
  ParameterUpdater(std::vector<nn::NamedTensor> params, Optimizer kind, double step_size)
      : params_(std::move(params)), kind_(kind), step_size_(step_size) {
    for (const auto& p : params_) {
      first_.emplace_back(p.tensor.size(), 0.0);
      second_.emplace_back(p.tensor.size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k].tensor;
      if (!p.has_grad()) continue;
      auto data = p.mutable_data();
      auto grad = p.grad();
      if (kind_ == Optimizer::kGradientDescent) {
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= step_size_ * grad[i];
        continue;
      }
      auto& m = first_[k];
      auto& v = second_[k];
      for (std::size_t i = 0; i < data.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        data[i] -= step_size_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  std::vector<nn::NamedTensor> params_;
  Optimizer kind_;
  double step_size_;
  int t_ = 0;
  std::vector<std::vector<double>> first_, second_;
};

struct TrainResult {
  std::vector<StepRecord> history;  // loss before each update
  StepRecord final;                 // loss after the last update
};

inline StepRecord evaluate_loss(const PromotionModel& model, const PreparedClip& clip,
                                const Tensor& target, const LossWeights& w,
                                const PerceptualExtractor& ext) {
  Tensor pred = model.forward(clip.clip_tensor, clip.prior_tensor, clip.blur);
  auto terms = total_loss(pred, target, clip.attention, w, ext);
  return {0, terms.total.item(), terms.charbonnier, terms.perceptual};
}

// Fits the model to a single clip for a fixed number of steps.
inline TrainResult train_on_clip(PromotionModel& model, const PreparedClip& clip,
                                 const RgbImage& target_image, const TrainOptions& opt,
                                 const std::function<void(const StepRecord&)>& on_step = {}) {
  const PerceptualExtractor ext;
  const Tensor target = image_tensor(target_image);
  ParameterUpdater updater(model.parameters(), opt.optimizer, opt.step_size);
  TrainResult result;
  for (int step = 1; step <= opt.steps; ++step) {
    updater.zero_grad();
    Tensor pred = model.forward(clip.clip_tensor, clip.prior_tensor, clip.blur);
    auto terms = total_loss(pred, target, clip.attention, opt.weights, ext);
    StepRecord rec{step, terms.total.item(), terms.charbonnier, terms.perceptual};
    if (!std::isfinite(rec.total))
      throw DataError("non-finite loss at step " + std::to_string(step));
    terms.total.backward();
    updater.step();
    result.history.push_back(rec);
    if (on_step) on_step(rec);
  }
  result.final = evaluate_loss(model, clip, target, opt.weights, ext);
  result.final.step = opt.steps + 1;
  if (!std::isfinite(result.final.total)) throw DataError("non-finite loss after training");
  return result;
}

}  // namespace promotion

#endif  // PROMOTION_TRAIN_HPP_
