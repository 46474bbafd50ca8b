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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "promotion/model.hpp"
#include "promotion/nn/checkpoint.hpp"
#include "promotion/train.hpp"

namespace promotion {
namespace {

using nn::Tensor;

BlurReasoningVector ones() { return {{1, 1, 1, 1, 1}}; }

Tensor random_stack(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::random_tensor({3, 5, h, w}, rng, 0.0, 1.0);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

TEST(PriorEncoder, MapsStackToQuarterResolutionFeatures) {
  std::mt19937_64 rng(1);
  PriorEncoder enc(128, rng);
  Tensor y = enc(random_stack(64, 64, 2));
  EXPECT_EQ(y.shape(), (nn::Shape{128, 16, 16}));
}

TEST(PriorEncoder, AcceptsAnySizeDivisibleByFour) {
  std::mt19937_64 rng(3);
  PriorEncoder enc(8, rng);
  for (std::size_t h : {4u, 8u, 20u, 36u})
    for (std::size_t w : {4u, 12u, 28u}) {
      Tensor y = enc(random_stack(h, w, h * 100 + w));
      EXPECT_EQ(y.shape(), (nn::Shape{8, h / 4, w / 4}));
    }
}

TEST(PriorEncoder, LargeInputShape) {
  std::mt19937_64 rng(4);
  PriorEncoder enc(16, rng);
  EXPECT_EQ(enc(random_stack(256, 256, 5)).shape(), (nn::Shape{16, 64, 64}));
}

TEST(PriorEncoder, RejectsBadInput) {
  std::mt19937_64 rng(5);
  PriorEncoder enc(8, rng);
  std::mt19937_64 r(6);
  EXPECT_THROW(enc(oracle::random_tensor({3, 5, 62, 64}, r)), ShapeError);
  EXPECT_THROW(enc(oracle::random_tensor({3, 5, 64, 30}, r)), ShapeError);
  EXPECT_THROW(enc(oracle::random_tensor({2, 5, 64, 64}, r)), ShapeError);
  EXPECT_THROW(enc(oracle::random_tensor({3, 4, 64, 64}, r)), ShapeError);
  EXPECT_THROW(enc(oracle::random_tensor({3, 5, 64}, r)), ShapeError);
}

TEST(PriorEncoder, ZeroStackGivesZeroFeatures) {
  std::mt19937_64 rng(7);
  PriorEncoder enc(8, rng);
  Tensor y = enc(Tensor::zeros({3, 5, 16, 16}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(PriorEncoder, FirstStageKeepsGroupsSeparate) {
  std::mt19937_64 rng(8);
  PriorEncoder enc(8, rng);
  Tensor stack = random_stack(12, 12, 9);
  Tensor base = enc.stage1(stack);
  Tensor altered = stack.detach();
  auto d = altered.mutable_data();
  const std::size_t group = 5 * 12 * 12;
  for (std::size_t i = group; i < 2 * group; ++i) d[i] = 1.0 - d[i];
  Tensor moved = enc.stage1(altered);
  const std::size_t per_channel = 3 * 12 * 12;
  double inside = 0.0;
  for (std::size_t ch = 0; ch < 9; ++ch) {
    double diff = 0.0;
    for (std::size_t i = ch * per_channel; i < (ch + 1) * per_channel; ++i)
      diff = std::max(diff, std::abs(base.data()[i] - moved.data()[i]));
    if (ch >= 3 && ch < 6)
      inside = std::max(inside, diff);
    else
      EXPECT_EQ(diff, 0.0) << "channel " << ch;
  }
  EXPECT_GT(inside, 0.0);
}

TEST(CaResBlock, ZeroInputStaysZero) {
  std::mt19937_64 rng(10);
  CaResBlock block(16, 4, rng);
  Tensor y = block(Tensor::zeros({16, 6, 6}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(CaResBlock, ZeroSecondConvIsIdentity) {
  std::mt19937_64 rng(11);
  CaResBlock block(16, 4, rng);
  for (double& v : block.conv_b().weight.mutable_data()) v = 0.0;
  std::mt19937_64 r(12);
  Tensor x = oracle::random_tensor({16, 6, 6}, r);
  Tensor y = block(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(CaResBlock, GateLiesInOpenUnitInterval) {
  std::mt19937_64 rng(13);
  CaResBlock block(32, 16, rng);
  std::mt19937_64 r(14);
  Tensor g = block.gate(oracle::random_tensor({32, 5, 5}, r, -3.0, 3.0));
  ASSERT_EQ(g.shape(), (nn::Shape{32}));
  for (double v : g.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(CaResBlock, RejectsIndivisibleReduction) {
  std::mt19937_64 rng(15);
  EXPECT_THROW(CaResBlock(20, 16, rng), ShapeError);
  EXPECT_THROW(CaResBlock(16, 0, rng), ShapeError);
}

TEST(BlurVector, OnesLeaveFeaturesUnchanged) {
  std::mt19937_64 r(16);
  Tensor x = oracle::random_tensor({5, 4, 3, 3}, r);
  Tensor y = apply_blur_vector(x, ones());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(BlurVector, ZeroWeightSilencesFrame) {
  std::mt19937_64 r(17);
  Tensor x = oracle::random_tensor({5, 4, 3, 3}, r);
  Tensor y = apply_blur_vector(x, {{1, 1, 0, 1, 1}});
  const std::size_t slice = 4 * 3 * 3;
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t i = f * slice; i < (f + 1) * slice; ++i)
      EXPECT_EQ(y.data()[i], f == 2 ? 0.0 : x.data()[i]);
}

TEST(BlurVector, LengthMismatchThrows) {
  Tensor x = Tensor::zeros({5, 2, 2});
  EXPECT_THROW(apply_blur_vector(x, {{1, 1, 1, 1}}), ShapeError);
}

ModelConfig small_config(std::uint64_t seed = 0) { return {16, 2, 4, seed}; }

PreparedClip toy_clip(int size, std::uint64_t seed) {
  return prepare_clip(make_toy_scene(size, seed).clip(), std::nullopt, 8, 2);
}

TEST(PromotionModel, FusionIsLinearInBlurWeights) {
  PromotionModel model(small_config(20));
  std::mt19937_64 rng(21);
  for (double& b : model.fusion_conv().bias.mutable_data()) b = nn::uniform(rng, -0.5, 0.5);
  const PreparedClip pc = toy_clip(16, 22);
  Tensor feats = model.frame_features(pc.clip_tensor);
  BlurReasoningVector v{{0.8, 1.1, 1.3, 0.9, 0.9}};
  BlurReasoningVector v2{{1.6, 2.2, 2.6, 1.8, 1.8}};
  Tensor a = model.fuse(feats, v);
  Tensor b = model.fuse(feats, v2);
  const auto bias = model.fusion_conv().bias.data();
  const std::size_t plane = a.dim(1) * a.dim(2);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(b.data()[i], 2.0 * a.data()[i] - bias[i / plane], 1e-12);
}

TEST(PromotionModel, PriorFeatureGatesFusion) {
  PromotionModel model(small_config(23));
  for (double& v : model.output_conv().weight.mutable_data()) v = 0.01;
  const PreparedClip pc = toy_clip(16, 24);
  // A zero encoder output removes every learned contribution.
  auto& fuse = model.encoder().fuse();
  for (double& v : fuse.weight.mutable_data()) v = 0.0;
  Tensor y = model.forward(pc.clip_tensor, pc.prior_tensor, pc.blur);
  Tensor y0 = model.forward(pc.clip_tensor, Tensor::zeros(pc.prior_tensor.shape()), pc.blur);
  EXPECT_EQ(max_abs_diff(y, y0), 0.0);
  // Ones make the multiplication an identity, so the features now matter.
  for (double& v : fuse.bias.mutable_data()) v = 1.0;
  Tensor y1 = model.forward(pc.clip_tensor, pc.prior_tensor, pc.blur);
  EXPECT_GT(max_abs_diff(y1, y0), 0.0);
}

TEST(PromotionModel, InitialOutputIsCenterFrame) {
  PromotionModel model(small_config(25));
  const PreparedClip pc = toy_clip(16, 26);
  Tensor y = model.forward(pc.clip_tensor, pc.prior_tensor, pc.blur);
  Tensor center = image_tensor(pc.clip.frames[2]);
  ASSERT_EQ(y.shape(), center.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y.data()[i], center.data()[i]);
}

TEST(PromotionModel, OutputMatchesInputResolution) {
  PromotionModel model(small_config(27));
  const PreparedClip pc = toy_clip(32, 28);
  EXPECT_EQ(model.forward(pc.clip_tensor, pc.prior_tensor, pc.blur).shape(),
            (nn::Shape{3, 32, 32}));
  RgbImage img = model.forward(pc.clip, pc.priors, pc.blur);
  EXPECT_EQ(img.rows(), 32);
  EXPECT_EQ(img.cols(), 32);
}

TEST(PromotionModel, RejectsBadInputs) {
  PromotionModel model(small_config(29));
  const PreparedClip pc = toy_clip(16, 30);
  EXPECT_THROW(model.forward(Tensor::zeros({3, 4, 16, 16}), pc.prior_tensor, pc.blur),
               ShapeError);
  EXPECT_THROW(model.forward(Tensor::zeros({3, 5, 18, 16}), Tensor::zeros({3, 5, 18, 16}),
                             pc.blur),
               ShapeError);
  EXPECT_THROW(model.forward(pc.clip_tensor, Tensor::zeros({3, 5, 8, 8}), pc.blur), ShapeError);
  EXPECT_THROW(model.forward(pc.clip_tensor, pc.prior_tensor, {{1, 1, 1}}), ShapeError);
  EXPECT_THROW(PromotionModel({18, 1, 2, 0}), ShapeError);
}

TEST(PromotionModel, SameSeedSameWeights) {
  PromotionModel a(small_config(31)), b(small_config(31)), c(small_config(32));
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(max_abs_diff(pa[i].tensor, pb[i].tensor), 0.0) << pa[i].name;
    any_diff = any_diff || max_abs_diff(pa[i].tensor, pc[i].tensor) > 0.0;
  }
  EXPECT_TRUE(any_diff);
}

TEST(PromotionModel, CheckpointRoundTripIsExact) {
  PromotionModel model(small_config(33));
  testing::perturb_for_grad_check(model, 33);
  testing::TempDir dir;
  nn::save_checkpoint(dir / "m.bin", model.checkpoint());
  PromotionModel back = PromotionModel::from_checkpoint(nn::load_checkpoint(dir / "m.bin"));
  EXPECT_EQ(back.config().channels, 16u);
  EXPECT_EQ(back.config().blocks, 2u);
  const auto pa = model.parameters(), pb = back.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(max_abs_diff(pa[i].tensor, pb[i].tensor), 0.0) << pa[i].name;
  }
  const PreparedClip pc = toy_clip(16, 34);
  EXPECT_EQ(max_abs_diff(model.forward(pc.clip_tensor, pc.prior_tensor, pc.blur),
                         back.forward(pc.clip_tensor, pc.prior_tensor, pc.blur)),
            0.0);
}

TEST(PromotionModel, CheckpointShapeMismatchIsRejected) {
  PromotionModel model(small_config(35));
  nn::Checkpoint ck = model.checkpoint();
  ck.tensors[0].tensor = Tensor::zeros({1});
  EXPECT_THROW(PromotionModel::from_checkpoint(ck), DataError);
  nn::Checkpoint short_ck = model.checkpoint();
  short_ck.tensors.pop_back();
  EXPECT_THROW(PromotionModel::from_checkpoint(short_ck), DataError);
}

TEST(PromotionModel, FullGradientMatchesCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = testing::full_model_grad_check({32, 2, 4, 0}, seed, 6);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_LT(r.max_absolute_error, 1e-10) << "seed " << seed;
    EXPECT_GT(r.checked, 100u);
  }
}

TEST(Training, StepSizeZeroKeepsLossConstant) {
  PromotionModel model(small_config(36));
  const ToyScene scene = make_toy_scene(16, 37);
  const PreparedClip pc = prepare_clip(scene.clip(), std::nullopt, 8, 2);
  TrainOptions opt;
  opt.steps = 3;
  opt.step_size = 0.0;
  opt.optimizer = Optimizer::kGradientDescent;
  auto r = train_on_clip(model, pc, scene.target(), opt);
  ASSERT_EQ(r.history.size(), 3u);
  for (const auto& s : r.history) EXPECT_EQ(s.total, r.history[0].total);
  EXPECT_EQ(r.final.total, r.history[0].total);
}

TEST(Training, FewAdamStepsReduceLoss) {
  PromotionModel model(small_config(38));
  const ToyScene scene = make_toy_scene(16, 39);
  const PreparedClip pc = prepare_clip(scene.clip(), std::nullopt, 8, 2);
  TrainOptions opt;
  opt.steps = 20;
  auto r = train_on_clip(model, pc, scene.target(), opt);
  EXPECT_LT(r.final.total, r.history[0].total);
}

}  // namespace
}  // namespace promotion
