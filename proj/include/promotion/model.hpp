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

#ifndef PROMOTION_MODEL_HPP_
#define PROMOTION_MODEL_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "promotion/error.hpp"
#include "promotion/media_io.hpp"
#include "promotion/nn/checkpoint.hpp"
#include "promotion/nn/init.hpp"
#include "promotion/nn/ops.hpp"
#include "promotion/nn/tensor.hpp"
#include "promotion/priors.hpp"

namespace promotion {

using nn::ConvSpec;
using nn::Shape;
using nn::Tensor;

// Convolution layer (2D or 3D) owning its weight and bias.
struct Conv {
  ConvSpec spec;
  bool volumetric = false;
  Tensor weight;
  Tensor bias;

  static Conv make(const ConvSpec& spec, bool volumetric, std::mt19937_64& rng,
                   bool zero = false) {
    spec.validate();
    Conv c{spec, volumetric, {}, {}};
    const Shape ws = volumetric ? spec.weight_shape_3d() : spec.weight_shape_2d();
    const std::size_t fan_in = nn::numel(ws) / spec.out_channels;
    c.weight = zero ? Tensor(ws, std::vector<double>(nn::numel(ws), 0.0), true)
                    : nn::kaiming_uniform(ws, fan_in, rng);
    c.bias = Tensor({spec.out_channels}, std::vector<double>(spec.out_channels, 0.0), true);
    return c;
  }

  Tensor operator()(const Tensor& x) const {
    return volumetric ? nn::conv3d(x, weight, bias, spec) : nn::conv2d(x, weight, bias, spec);
  }

  void collect(const std::string& prefix, std::vector<nn::NamedTensor>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
  }
};

// Packs a prior stack as a (3,5,H,W) constant tensor.
inline Tensor prior_tensor(const PriorStack& stack) {
  return Tensor({kPriorGroups, kPriorDepth, static_cast<std::size_t>(stack.rows()),
                 static_cast<std::size_t>(stack.cols())},
                stack.packed());
}

// Packs a clip as a (3, frames, H, W) constant tensor.
inline Tensor clip_tensor(const FrameSequence& clip) {
  const std::size_t F = clip.frames.size(), P = static_cast<std::size_t>(clip.rows()) * clip.cols();
  std::vector<double> d(3 * F * P);
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t f = 0; f < F; ++f)
      std::copy_n(clip.frames[f].values().begin() + ch * P, P, d.begin() + (ch * F + f) * P);
  return Tensor({3, F, static_cast<std::size_t>(clip.rows()), static_cast<std::size_t>(clip.cols())},
                std::move(d));
}

inline Tensor image_tensor(const RgbImage& img) {
  return Tensor({3, static_cast<std::size_t>(img.rows()), static_cast<std::size_t>(img.cols())},
                std::vector<double>(img.values().begin(), img.values().end()));
}

inline RgbImage tensor_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("tensor_image: expected (3,H,W)");
  RgbImage img(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(2)));
  std::copy(t.data().begin(), t.data().end(), img.values().begin());
  return img;
}

// Heterogeneous prior encoder: two grouped 3x5x5 volumetric convolutions
// (depth unpadded, spatial padding 2) each followed by relu and 2x2 max
// pooling, then a 1x1 fuse to `out_channels`.
class PriorEncoder {
 public:
  static ConvSpec conv1_spec() { return {3, 9, {3, 5, 5}, {1, 1, 1}, {0, 2, 2}, 3}; }
  static ConvSpec conv2_spec() { return {9, 27, {3, 5, 5}, {1, 1, 1}, {0, 2, 2}, 9}; }
  static ConvSpec fuse_spec(std::size_t out_channels) {
    return ConvSpec::conv2d(27, out_channels, 1);
  }

  PriorEncoder() = default;
  PriorEncoder(std::size_t out_channels, std::mt19937_64& rng)
      : conv1_(Conv::make(conv1_spec(), true, rng)),
        conv2_(Conv::make(conv2_spec(), true, rng)),
        fuse_(Conv::make(fuse_spec(out_channels), false, rng)) {}

  // First-stage activations (9, 3, H, W), before pooling.
  Tensor stage1(const Tensor& stack) const {
    check_input(stack);
    return nn::relu(conv1_(stack));
  }

  Tensor operator()(const Tensor& stack) const {
    Tensor y = nn::maxpool2d(stage1(stack));  // (9,3,H/2,W/2)
    y = nn::maxpool2d(nn::relu(conv2_(y)));    // (27,1,H/4,W/4)
    y = nn::reshape(y, {y.dim(0), y.dim(2), y.dim(3)});
    return fuse_(y);
  }

  void collect(const std::string& prefix, std::vector<nn::NamedTensor>& out) const {
    conv1_.collect(prefix + ".conv1", out);
    conv2_.collect(prefix + ".conv2", out);
    fuse_.collect(prefix + ".fuse", out);
  }

  Conv& conv1() { return conv1_; }
  Conv& conv2() { return conv2_; }
  Conv& fuse() { return fuse_; }

 private:
  static void check_input(const Tensor& stack) {
    if (stack.rank() != 4 || stack.dim(0) != kPriorGroups || stack.dim(1) != kPriorDepth)
      throw ShapeError("PriorEncoder: expected (3,5,H,W) prior stack, got " +
                       nn::to_string(stack.shape()));
    if (stack.dim(2) % 4 != 0 || stack.dim(3) % 4 != 0)
      throw ShapeError("PriorEncoder: H and W must be divisible by 4, got " +
                       nn::to_string(stack.shape()));
  }

  Conv conv1_, conv2_, fuse_;
};

// Residual block with channel attention:
//   f = conv_b(relu(conv_a(x))),  y = x + sigmoid(up(relu(down(avgpool(f))))) * f
class CaResBlock {
 public:
  CaResBlock() = default;
  CaResBlock(std::size_t channels, std::size_t reduction, std::mt19937_64& rng) {
    if (reduction == 0 || channels % reduction != 0)
      throw ShapeError("CaResBlock: channels " + std::to_string(channels) +
                       " not divisible by reduction " + std::to_string(reduction));
    conv_a_ = Conv::make(ConvSpec::conv2d(channels, channels, 3, 1, 1), false, rng);
    conv_b_ = Conv::make(ConvSpec::conv2d(channels, channels, 3, 1, 1), false, rng);
    down_ = Conv::make(ConvSpec::conv2d(channels, channels / reduction, 1), false, rng);
    up_ = Conv::make(ConvSpec::conv2d(channels / reduction, channels, 1), false, rng);
  }

  Tensor body(const Tensor& x) const { return conv_b_(nn::relu(conv_a_(x))); }

  Tensor gate(const Tensor& features) const {
    Tensor s = nn::global_avg_pool(features);
    s = nn::reshape(s, {s.dim(0), 1, 1});
    s = nn::sigmoid(up_(nn::relu(down_(s))));
    return nn::reshape(s, {s.dim(0)});
  }

  Tensor operator()(const Tensor& x) const {
    Tensor f = body(x);
    return nn::add(x, nn::mul_channel(f, gate(f)));
  }

  void collect(const std::string& prefix, std::vector<nn::NamedTensor>& out) const {
    conv_a_.collect(prefix + ".conv_a", out);
    conv_b_.collect(prefix + ".conv_b", out);
    down_.collect(prefix + ".down", out);
    up_.collect(prefix + ".up", out);
  }

  Conv& conv_a() { return conv_a_; }
  Conv& conv_b() { return conv_b_; }

 private:
  Conv conv_a_, conv_b_, down_, up_;
};

// Scales frame i's features (first axis) by v[i].
inline Tensor apply_blur_vector(const Tensor& aligned, const BlurReasoningVector& v) {
  if (aligned.rank() < 1 || aligned.dim(0) != v.weights.size())
    throw ShapeError("apply_blur_vector: " + std::to_string(v.weights.size()) +
                     " weights for features " + nn::to_string(aligned.shape()));
  return nn::scale_slices(aligned, v.weights, 0);
}

struct ModelConfig {
  std::size_t channels = 128;
  std::size_t blocks = 4;
  std::size_t reduction = 16;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"channels", channels}, {"blocks", blocks}, {"reduction", reduction}, {"seed", seed}};
  }
  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.channels = j.at("channels").get<std::size_t>();
    c.blocks = j.at("blocks").get<std::size_t>();
    c.reduction = j.at("reduction").get<std::size_t>();
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
  }
};

// Multi-frame deblurring network. The backbone is deliberately simple:
// shared per-frame features (two stride-2 3x3 convs), blur-vector scaling
// per frame, a 1x1 fusion over all frames, multiplication by the encoded
// prior feature, channel-attention residual blocks, two nearest-neighbour
// x2 upsampling stages, and a zero-initialized output conv added to the
// center frame.
class PromotionModel {
 public:
  static constexpr std::size_t kFrames = 5;

  PromotionModel() = default;
  explicit PromotionModel(const ModelConfig& cfg) : cfg_(cfg) {
    const std::size_t C = cfg.channels;
    if (C % 4 != 0) throw ShapeError("PromotionModel: channels must be a multiple of 4");
    std::mt19937_64 rng(cfg.seed);
    feat_a_ = Conv::make({3, C / 2, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}, 1}, true, rng);
    feat_b_ = Conv::make({C / 2, C, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}, 1}, true, rng);
    fusion_ = Conv::make(ConvSpec::conv2d(kFrames * C, C, 1), false, rng);
    encoder_ = PriorEncoder(C, rng);
    for (std::size_t b = 0; b < cfg.blocks; ++b) blocks_.emplace_back(C, cfg.reduction, rng);
    up1_ = Conv::make(ConvSpec::conv2d(C, C / 2, 3, 1, 1), false, rng);
    up2_ = Conv::make(ConvSpec::conv2d(C / 2, C / 4, 3, 1, 1), false, rng);
    out_ = Conv::make(ConvSpec::conv2d(C / 4, 3, 3, 1, 1), false, rng, /*zero=*/true);
  }

  const ModelConfig& config() const { return cfg_; }

  // Per-frame features of a (3,5,H,W) clip tensor: (C,5,H/4,W/4).
  Tensor frame_features(const Tensor& clip) const {
    return nn::relu(feat_b_(nn::relu(feat_a_(clip))));
  }

  // Fusion pre-activation after blur-vector scaling: (C,H/4,W/4).
  Tensor fuse(const Tensor& features, const BlurReasoningVector& v) const {
    if (v.weights.size() != kFrames) throw ShapeError("fuse: blur vector must have 5 weights");
    Tensor scaled = nn::scale_slices(features, v.weights, 1);
    Tensor flat = nn::reshape(scaled, {scaled.dim(0) * scaled.dim(1), scaled.dim(2), scaled.dim(3)});
    return fusion_(flat);
  }

  Tensor forward(const Tensor& clip, const Tensor& priors, const BlurReasoningVector& v) const {
    check_inputs(clip, priors);
    Tensor fused = nn::relu(fuse(frame_features(clip), v));
    Tensor y = nn::mul(fused, encoder_(priors));
    for (const auto& b : blocks_) y = b(y);
    y = nn::relu(up1_(nn::upsample_nearest2x(y)));
    y = nn::relu(up2_(nn::upsample_nearest2x(y)));
    y = out_(y);
    return nn::add(y, center_frame(clip));
  }

  RgbImage forward(const FrameSequence& clip, const PriorStack& stack,
                   const BlurReasoningVector& v) const {
    if (clip.size() != static_cast<int>(kFrames) || clip.center_index != 2)
      throw ShapeError("forward: clip must hold 5 frames centered at index 2");
    return tensor_image(forward(clip_tensor(clip), prior_tensor(stack), v));
  }

  std::vector<nn::NamedTensor> parameters() const {
    std::vector<nn::NamedTensor> out;
    feat_a_.collect("features.conv_a", out);
    feat_b_.collect("features.conv_b", out);
    fusion_.collect("fusion", out);
    encoder_.collect("prior_encoder", out);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      blocks_[b].collect("blocks." + std::to_string(b), out);
    up1_.collect("upsample.conv1", out);
    up2_.collect("upsample.conv2", out);
    out_.collect("output", out);
    return out;
  }

  nn::Checkpoint checkpoint() const { return {cfg_.to_json().dump(), parameters()}; }

  static PromotionModel from_checkpoint(const nn::Checkpoint& ck) {
    PromotionModel m(ModelConfig::from_json(nlohmann::json::parse(ck.metadata)));
    auto params = m.parameters();
    if (params.size() != ck.tensors.size())
      throw DataError("checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
                      std::to_string(ck.tensors.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& src = ck.tensors[i];
      auto& dst = params[i];
      if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape())
        throw DataError("checkpoint: tensor '" + src.name + "' does not match '" + dst.name + "'");
      std::copy(src.tensor.data().begin(), src.tensor.data().end(),
                dst.tensor.mutable_data().begin());
    }
    return m;
  }

  PriorEncoder& encoder() { return encoder_; }
  std::vector<CaResBlock>& blocks() { return blocks_; }
  Conv& output_conv() { return out_; }
  Conv& fusion_conv() { return fusion_; }

 private:
  static Tensor center_frame(const Tensor& clip) { return nn::select(clip, 1, clip.dim(1) / 2); }

  static void check_inputs(const Tensor& clip, const Tensor& priors) {
    if (clip.rank() != 4 || clip.dim(0) != 3 || clip.dim(1) != kFrames)
      throw ShapeError("forward: expected clip (3,5,H,W), got " + nn::to_string(clip.shape()));
    if (clip.dim(2) % 4 != 0 || clip.dim(3) % 4 != 0)
      throw ShapeError("forward: H and W must be divisible by 4");
    if (priors.rank() != 4 || priors.dim(2) != clip.dim(2) || priors.dim(3) != clip.dim(3))
      throw ShapeError("forward: prior stack " + nn::to_string(priors.shape()) +
                       " does not match clip " + nn::to_string(clip.shape()));
  }

  ModelConfig cfg_;
  Conv feat_a_, feat_b_, fusion_;
  PriorEncoder encoder_;
  std::vector<CaResBlock> blocks_;
  Conv up1_, up2_, out_;
};

}  // namespace promotion

#endif  // PROMOTION_MODEL_HPP_
